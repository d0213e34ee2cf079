"""Pinching-antenna system (PASS) downlink simulator.

Mobile users under Gauss-Markov motion, UMi LoS/blockage channel, movable
pinching antennas on parallel waveguides, zero-forcing precoding in the
inner loop, and a soft actor-critic agent sliding the antennas in the
outer loop.
"""

__version__ = "0.1.0"
