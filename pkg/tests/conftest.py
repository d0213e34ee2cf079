import numpy as np

from passim.neural import forward


def finite_difference_grads(net, x, proj, h=1e-5):
    """Central differences of loss = proj . forward(net, x) over all params."""
    grads = []
    for p in net.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            net.version += 1
            hi = float(np.dot(proj, forward(net, x)[0]))
            p[idx] = orig - h
            net.version += 1
            lo = float(np.dot(proj, forward(net, x)[0]))
            p[idx] = orig
            net.version += 1
            g[idx] = (hi - lo) / (2.0 * h)
        grads.append(g)
    return grads
