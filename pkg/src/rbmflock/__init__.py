"""Cucker-Smale flocking with random batch methods (RBM-1, RBM-r) and a direct MC baseline."""

from . import backend
from .config import MethodKind, SimConfig, load_config
from .dynamics import Derivative, Ensemble, batch_rhs, euler_substep, full_rhs, integrate_interval
from .errors import BlowupError, ConfigError, DomainError, RbmError, ValidationError
from .kernel import Kernel, ValidationReport, eval_kernel, validate
from .methods import (
    SelectionLedger,
    advance,
    run,
    run_triple,
    step_ips,
    step_mc,
    step_rbm1,
    step_rbmr,
    step_rbmr_equiv,
)
from .sampling import RngStream, sample_batch, sample_mc_neighbors, sample_partition

__version__ = "0.1.0"
BACKEND = backend.NAME
