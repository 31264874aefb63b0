"""Concentration of circuit-encoded data: exact averages, bounds, experiments."""

from .core import (
    DensityMatrix,
    GateSpec,
    PauliString,
    StateVector,
    apply_gate,
    density_from_state,
    expectation,
    hermitian_eigen,
    zero_state,
)
from .encoding import (
    EncodingCircuitSpec,
    GaussianFeatureSpec,
    encode,
    monte_carlo_average,
    ry_product,
    sample_features,
    strongly_entangling_ry,
    substream,
    u3_entangled,
)
from .analytic import (
    BoundQuery,
    PauliVector,
    SignedPermutation,
    analytic_average_state,
    averaged_rotation_transfer,
    bound_general,
    bound_ry_layered,
    bound_warmup,
    depth_threshold,
    entangler_transfer,
    pauli_vector_of,
)
from .metrics import fidelity, petz_renyi2, renyi2_vs_mixed, trace_norm_distance
from .learn import (
    LabeledDataset,
    QnnSpec,
    TrainConfig,
    TrainReport,
    adam_step,
    ce_loss,
    evaluate,
    grad_param_shift,
    gradient_probe,
    qnn_forward,
    random_theta,
    standard_qnn,
    train,
)
from .discriminate import (
    ClassEnsemble,
    Measurement,
    class_average_states,
    helstrom_binary,
    psucc_bound,
)
from .datasets import (
    RawMnist,
    SyntheticTaskSpec,
    generate_dataset,
    load_mnist_idx,
    preprocess_mnist,
    synthetic_spec,
)

__version__ = "0.1.0"
