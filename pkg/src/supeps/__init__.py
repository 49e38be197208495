"""Simple-update PEPS evolution of random quantum circuits, with an
exact state-vector oracle for cross-checking on small lattices.

The package splits into six layers, re-exported here:

- ``tensor``: dense named-leg tensors and the split/contract primitives.
- ``circuits``: lattices, gate draws, layer schedules, instance files.
- ``peps``: the Vidal-gauge state, simple update, gauging, traces.
- ``oracle``: exact state vectors, full PEPS contraction, fidelities.
- ``analysis``: fidelity-law fits, scaling collapse, error reports.
- ``cli``: the ``supeps`` command (generate / run / analyze / emit).
"""

from .errors import (AlignmentError, DegenerateDataError,
                     DegenerateInputError, DimensionError, EmptyOutputError,
                     LegLabelError, ParameterError, ResourceError, SizeError,
                     SplitError, SupepsError, UnderdeterminedError)
from .tensor import (DenseTensor, contract, gram_split, qr_split, scale_leg,
                     svd_truncated)
from .circuits import (CircuitInstance, Lattice, build_lattice, cz_matrix,
                       fsim_matrix, generate_instance, haar_unitary4,
                       load_instance, save_instance, scheduled_gate_count)
from .peps import (PepsState, apply_layer, apply_single_qubit, gauge_residual,
                   gauge_sweep, init_product_state, lambda_spectra,
                   load_state, run_circuit, save_state, simple_update)
from .oracle import (OracleMetrics, StateVector, apply_layer_to_vector,
                     bitstring_probabilities, compute_metrics,
                     entanglement_entropy, entropy_profile, exact_fidelity,
                     nxeb, operator_schmidt, peps_norm, peps_overlap,
                     peps_to_statevector, ptd_distance, statevector_run)
from .analysis import (ErrorReport, ScalingFit, ThreeStageFit,
                       aggregate_instances, anticoncentration_depth,
                       build_error_report, cost_estimate, error_per_gate,
                       fit_scaling, fit_three_stage, mps_error_reference)
from .cli import RunConfig, analyze_run, emit_plot_data, run_experiment

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
