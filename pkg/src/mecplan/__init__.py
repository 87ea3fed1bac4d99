"""mecplan: cross-layer delay/reliability planning for MC-IoT over MEC.

Closed-form radio and queueing models, a discrete-event simulator that
validates them, and min-max packet-loss solvers over user association,
offload rates and subcarrier allocation.
"""

__version__ = "0.1.0"
