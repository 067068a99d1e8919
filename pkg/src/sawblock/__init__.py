"""Spread interdiction on Linear Threshold graphs via hitting self-avoiding walks."""
from ._backend import BACKEND
from .coverage import (CoverageIndex, Schedule, check, compute_schedule, greedy_max_cover,
                       greedy_max_cover_naive)
from .errors import GraphFormatError, ReplayError, SamplingExhausted
from .evaluation import (ExactOracle, RemovalSet, analyze_solution, baseline,
                         brute_force_suspension, estimate_suspension, lt_forward_simulate)
from .graph import (CandidateSet, ProbGraph, SuspectSet, load_binary, load_candidates,
                    load_edge_list, load_suspects, random_suspects, synth_graph)
from .interdiction import InterdictionResult, esia, nsia
from .partition import Partitioning, distributed_sample, extend_partition, partition_graph
from .sampler import (EncodedWalk, HsawSample, SamplePool, SampleStream, decode_walk,
                      estimate_influence, sample_hsaw_naive, stream_samples, thread_sample)

__version__ = "0.1.0"
