"""Approximate arithmetic operators by LUT pruning, with characterization and DSE."""
from .apps import (AppBehavMetrics, AppEvaluator, Conv2d3x3, FirLowPass, app_behav, app_dse,
                   quantize, run_task)
from .axmodel import (AxoConfig, OperatorLibrary, SamplingKind, SamplingStrategy, apply_config,
                      enumerate_configs, library_from_configs, library_lookup, sample_configs)
from .behav import (BehavMetrics, Exact, Exhaustive, LookupTable, MonteCarlo, NetlistFunctional,
                    PolyRegression, characterize_behav, estimate_output, estimator_benchmark,
                    fit_poly_estimator)
from .dse import (DesignPoint, Evaluator, GaParams, Objectives, ParetoArchive, evaluate_list,
                  hypervolume_2d, nsga2_search, pareto_front, validate_points)
from .errors import AxoError, DataError, InvalidNetlist
from .netlist import CarryCell, LutCell, Netlist, simulate, simulate_batch, validate
from .opgen import (OperatorSpec, OpKind, config_length, gen_signed_mul_bw, gen_unsigned_adder,
                    generate, parse_spec)
from .ppa import DelayModel, PowerPlan, PpaMetrics, characterize_ppa, import_ppa
from .rtl import RtlMode, emit_verilog
from .surrogate import FeatureMode, SurrogateModel, fit_surrogate, predict

__version__ = "0.1.0"
