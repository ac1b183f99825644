"""qcest: optimal state-estimation and N-cloning fidelities for finite pure-state ensembles."""

from .channels import (ChoiMatrix, MultiCloneChoi, apply_channel,
                       average_clone_fidelity, channel_fidelity,
                       choi_from_measure_prepare, depolarizing_choi,
                       identity_choi, is_ppt, load_choi, marginal_choi,
                       negativity, save_choi, symmetrize)
from .ensembles import (Ensemble, blind_guess_value, fidelity_operator,
                        lift_copies, load_ensemble, make_builtin,
                        save_ensemble)
from .optim import (ConvergenceReport, EstimationStrategy, ExtendibleProgram,
                    FidelityBounds, TradeoffCurve, asym_tradeoff,
                    build_extendible_program, converge, fc_direct, fc_ext,
                    fm_bounds, fm_seesaw, fm_upper)
from .sdp import SdpProblem, SdpSolution, SolverError, solve

__version__ = "0.1.0"

__all__ = [
    "ChoiMatrix", "MultiCloneChoi", "apply_channel", "average_clone_fidelity",
    "channel_fidelity", "choi_from_measure_prepare", "depolarizing_choi",
    "identity_choi", "is_ppt", "load_choi", "marginal_choi", "negativity",
    "save_choi", "symmetrize",
    "Ensemble", "blind_guess_value", "fidelity_operator", "lift_copies",
    "load_ensemble", "make_builtin", "save_ensemble",
    "ConvergenceReport", "EstimationStrategy", "ExtendibleProgram",
    "FidelityBounds", "TradeoffCurve", "asym_tradeoff",
    "build_extendible_program", "converge", "fc_direct", "fc_ext",
    "fm_bounds", "fm_seesaw", "fm_upper",
    "SdpProblem", "SdpSolution", "SolverError", "solve",
    "__version__",
]
