"""Simulation laboratory for causal posterior matching over a binary
symmetric channel with feedback: an exact codec for causally arriving bit
streams, a numerical error-exponent solver, and a closed-loop control
application that stabilizes an unstable scalar plant over the channel.
"""

__version__ = "0.1.0"

from .codec import (
    ArrivalSchedule,
    BranchRecord,
    ChannelParams,
    CodecSession,
    CodecState,
    ProtocolError,
    Transcript,
    bayes_log_factors,
    bits_arrived,
    bsc_transmit,
    compute_randomization,
    decoder_step,
    encoder_absorb,
    encoder_step,
    named_stream,
    replay_decoder,
    run_session,
)
from .control import (
    ControlTrajectory,
    ModelViolation,
    PlantParams,
    controller_step,
    simulate_closed_loop,
    stability_sweep,
)
from .dyadic import DyadicPoint
from .exponents import (
    ExponentSolution,
    NoPositiveExponent,
    RateBound,
    capacity,
    lambda_for_budget,
    max_log_alpha,
    psi,
    psi_star,
    rate_bound,
    solve_exponent,
    solve_exponent_extended,
    theoretical_error_curve,
)
from .posterior import (
    DomainError,
    MedianQuery,
    NormalizationError,
    PosteriorDensity,
    ResolutionError,
)

__all__ = [
    "ArrivalSchedule", "BranchRecord", "ChannelParams", "CodecSession",
    "CodecState", "ControlTrajectory", "DomainError", "DyadicPoint",
    "ExponentSolution", "MedianQuery", "ModelViolation", "NoPositiveExponent",
    "NormalizationError", "PlantParams", "PosteriorDensity", "ProtocolError",
    "RateBound", "ResolutionError", "Transcript", "bayes_log_factors",
    "bits_arrived", "bsc_transmit", "capacity", "compute_randomization",
    "controller_step", "decoder_step", "encoder_absorb", "encoder_step",
    "lambda_for_budget", "max_log_alpha", "named_stream", "psi", "psi_star",
    "rate_bound", "replay_decoder", "run_session", "simulate_closed_loop",
    "solve_exponent", "solve_exponent_extended", "stability_sweep",
    "theoretical_error_curve",
]
