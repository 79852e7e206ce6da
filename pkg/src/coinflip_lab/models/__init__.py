from .attack_report import AttackReport as AttackReport
from .base import ReportModel as ReportModel
from .estimate import MonteCarloEstimate as MonteCarloEstimate
from .experiment import CSV_COLUMNS as CSV_COLUMNS
from .experiment import ExperimentRow as ExperimentRow
from .family import FamilyMember as FamilyMember
from .family import FamilyResult as FamilyResult
from .resilience import ResilienceReport as ResilienceReport
from .trace import ProcessStep as ProcessStep
from .trace import ProcessTrace as ProcessTrace
from .trace import StepCase as StepCase
