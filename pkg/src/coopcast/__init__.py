"""Rate regions of discrete memoryless broadcast channels whose receivers
can confer over finite-capacity links."""
from .prob import (BroadcastChannel, InvalidDistribution, JointPmf, Kernel, Pmf,
                   compose_chain, conditional_entropy, entropy, is_physically_degraded,
                   mutual_information)

__version__ = "0.1.0"

__all__ = ["BroadcastChannel", "InvalidDistribution", "JointPmf", "Kernel", "Pmf",
           "compose_chain", "conditional_entropy", "entropy", "is_physically_degraded",
           "mutual_information"]
