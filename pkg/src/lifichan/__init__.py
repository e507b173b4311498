"""Frequency-domain simulator for indoor optical wireless (LiFi) channels.

Combines a generalized-Lambertian line-of-sight model, a truncated
frequency-domain patch model for the first two diffuse reflections, and an
integrating-sphere closed form for all higher-order reflections into
complete multi-link channel transfer functions.
"""

from ._kernels import active_backend, available_backends, set_num_threads, use_backend
from .assembler import (
    ChannelMatrix,
    ChannelWorkspace,
    HeatMap,
    HeatmapSpec,
    MobilityTrace,
    Pose,
    SolverOptions,
    dc_heatmap,
    gain_db,
    impulse_response,
    link_response,
    mimo_matrix,
    mobility_sweep,
    relative_mse,
)
from .coupling import (
    Coupling,
    at_frequency,
    emitter_to_detector,
    emitter_to_patch,
    patch_to_detector,
    patch_to_patch,
)
from .diffuse import (
    IntrinsicOperator,
    SourceField,
    brute_force_two_bounce,
    build_intrinsic,
    diffuse_response,
    source_field,
    source_fields,
)
from .response import TransferFunction
from .scene import (
    FACE_NAMES,
    SPEED_OF_LIGHT,
    Detector,
    Emitter,
    FrequencyGrid,
    Patch,
    PatchSet,
    Room,
    Scene,
    average_reflectivity,
    discretize,
    effective_time_resolution,
    lambertian_order_from_half_power,
)
from .scenario import (
    Scenario,
    bundled_scenario_path,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    save_scenario,
)
from .sphere import (
    SphereParams,
    decay_time,
    initially_lit_face,
    mean_reflection_interval,
    params_for_scene,
    tail_gain,
    tail_gain_expanded,
    tail_response,
)

__version__ = "0.1.0"
