from . import oracles
from . import properties
from . import report
from .report import Status, VerificationReport, Verifier, run_verification, ALL_CHECKS
