"""Sit-to-stand biomechanics toolkit.

Four-link sagittal inverse dynamics with an assistive cane thrust, GRF
falls-risk parameters, depth-sensor skeleton to joint-angle conversion,
and a closed-loop simulation of the pneumatic cane.
"""

__version__ = "0.1.0"

from .anthro import (
    AnthropometricModel,
    AnthroTable,
    SegmentParams,
    Subject,
    default_table,
    scale_anthropometrics,
)
from .kinematics import (
    ChainPose,
    JointAngles,
    PhaseTimings,
    PoseTrajectory,
    chain_poses,
    differentiate,
    forward_kinematics,
    generate_sts_trajectory,
)
from .dynamics import (
    CaneForce,
    DynamicsFrame,
    SegmentLoads,
    inverse_dynamics,
    solve_frame,
)
from .grf_analysis import (
    EventConfig,
    GrfParameters,
    GrfProfile,
    IncompleteMovementError,
    StsEvents,
    TrialStats,
    detect_events,
    extract_parameters,
    trial_statistics,
)
from .perception import (
    SagittalFrame,
    SagittalPlane,
    SkeletonFrame,
    fit_sagittal_plane,
    project_and_angles,
    read_skeleton_file,
    smooth_and_resample,
)
from .control_sim import (
    CaneCommand,
    ControllerConfig,
    ForceController,
    IntentDetector,
    IntentEvent,
    PlantState,
    Scenario,
    plant_step,
    run_episode,
)

__all__ = [name for name in dir() if not name.startswith("_")]
