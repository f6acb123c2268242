"""Liouville-space diagnostics and propagation for truncated quantum dynamics."""

__version__ = "0.1.0"

from .core_ops import (
    DensityMatrix,
    TruncatedMatrix,
    adjoint,
    finite_rank_project,
    hs_inner,
    hs_norm,
    operator_norm,
    trace_norm,
)
from .diagnostics import Classification, Tolerances, TruncationLadder, classify, diagnose, partial_sums
from .dsl import evaluate, parse, to_source
from .engine import (
    Propagator,
    commutator_apply,
    evolve,
    liouvillian_squared_apply,
    superpropagator_apply,
    vectorized_liouvillian,
)
from .models import (
    DiagonalHamiltonian,
    ElementRule,
    Explicit,
    Gibbs,
    HermitianHamiltonian,
    InverseHamiltonian,
    RankSum,
    RankTerm,
    fixture,
    oracle_catalog,
    realize_hamiltonian,
    realize_operator,
)
