"""Metric subset spaces and the SuperM-Tree index for subsequence and subset search."""

from .distances import L2WIN, SDK, SHD, dk, get_space, hausdorff, sdk, sdk_bruteforce, shd, windowed_l2
from .space import SizeOrder, SubsetSpace, check_chain_triangle, reverse_space
from .tree import Neighbor, SplitPolicy, SuperMTree, TreeConfig

__version__ = "0.1.0"

__all__ = [
    "L2WIN",
    "SDK",
    "SHD",
    "Neighbor",
    "SizeOrder",
    "SplitPolicy",
    "SubsetSpace",
    "SuperMTree",
    "TreeConfig",
    "check_chain_triangle",
    "dk",
    "get_space",
    "hausdorff",
    "reverse_space",
    "sdk",
    "sdk_bruteforce",
    "shd",
    "windowed_l2",
]
