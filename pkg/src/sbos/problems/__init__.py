from .base import DATA, GRADIENT, DataProblem, GradientProblem, InnerProblem
from .dosage import (DosageInstance, DosageProblem, dosage_sample, dosage_true_value,
                     center_optimum, optimal_dose)
from .newsvendor import (NewsvendorInstance, NewsvendorProblem, newsvendor_draw,
                         newsvendor_true_value, newsvendor_saa, saa_quantile)
from .queueing import (QueueingInstance, QueueingProblem, SimOutput, audit_log, nhpp_arrivals,
                       queueing_sample, run_tandem, simulate_queueing)
from .synthetic import (GaussianQuadratic, KinkProblem, complexity_h2, offgrid_instance,
                        synthetic_gaussian_family)

__all__ = [
    "DATA", "GRADIENT", "DataProblem", "GradientProblem", "InnerProblem",
    "DosageInstance", "DosageProblem", "dosage_sample", "dosage_true_value",
    "center_optimum", "optimal_dose",
    "NewsvendorInstance", "NewsvendorProblem", "newsvendor_draw", "newsvendor_true_value",
    "newsvendor_saa", "saa_quantile",
    "QueueingInstance", "QueueingProblem", "SimOutput", "audit_log", "nhpp_arrivals",
    "queueing_sample", "run_tandem", "simulate_queueing",
    "GaussianQuadratic", "KinkProblem", "complexity_h2", "offgrid_instance",
    "synthetic_gaussian_family",
]
