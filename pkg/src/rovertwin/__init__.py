"""rovertwin: a self-contained digital twin of a differential-drive robot.

Subsystems: planar geometry and sensor types (core), drivetrain kinematics
and motor control (drivetrain), deterministic world simulation with lidar
and stability analysis (world), lidar-only SLAM (mapping/mapfiles), Monte
Carlo localization (mcl), teleoperation pipelines (teleop), an in-process
topic bus with serial framing and a WebSocket bridge (bus/framing/bridge),
record/replay (bags), and the CLI harness (cli).
"""

from .core import (
    GRAVITY,
    ImuSample,
    LaserScan,
    OccupancyGrid,
    Pose2D,
    RobotParams,
    Twist2D,
    compose_pose,
    grid_to_world,
    normalize_angle,
    world_to_grid,
)
from .drivetrain import (
    AxisError,
    AxisMode,
    MotorAxis,
    MotorAxisState,
    WheelSpeeds,
    forward_kinematics,
    hall_decode,
    integrate_odometry,
    inverse_kinematics,
    ticks_per_revolution,
)
from .world import (
    LidarSpec,
    SimState,
    Simulator,
    StabilityConfig,
    StabilityResult,
    WorldMap,
    check_stability,
    drive_circle,
    load_world,
    save_world,
    simulate_lidar,
)
from .mapping import (
    Mapper,
    MapperConfig,
    MatchOptions,
    MatchResult,
    interpolate_occupancy,
    match_scan,
    rasterize_world,
    update_map,
)
from .mapfiles import load_map, save_map
from .mcl import (
    LikelihoodField,
    MclConfig,
    MclFilter,
    ParticleSet,
    estimate,
    init_global,
    predict,
    resample,
    update_weights,
)
from .teleop import (
    Attitude,
    CommandArbiter,
    GestureConfig,
    RcCalibration,
    RcCommand,
    RcFrame,
    complementary_filter,
    gesture_to_twist,
    rc_decode,
)
from .bus import Bus, TopicMessage
from .framing import FrameDecoder, TopicRegistry, decode_frame, encode_frame
from .bridge import WebSocketBridge, websocket_bridge
from .bags import BagWriter, read_bag, replay

__version__ = "0.1.0"
