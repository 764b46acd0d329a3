"""Shared planar-scene synchronization: codec, sync protocol, relay,
network-emulation benchmark harness, and navigation geometry."""

from .scene import (
    CATEGORY_COLORS,
    GRAY,
    MalformedRecord,
    SceneCategory,
    SceneObject,
    SceneSnapshot,
    decode_object,
    display_color,
    encode_object,
    encode_snapshot,
    snapshot_size_bytes,
)
from .synthesis import (
    DoorSpec,
    InvalidSpec,
    PlatformSpec,
    RoomSpec,
    ScanState,
    World,
    builtin_room,
    construction_benchmark,
    full_scan,
    generate_room,
    scan_step,
)
from .wire import (
    Ack,
    AuthFailure,
    DecodeError,
    FramingCodec,
    FramingProfile,
    Heartbeat,
    Hello,
    ObjectUpdate,
    PoseUpdate,
    Reject,
    RejectReason,
    Role,
    TooLarge,
    Welcome,
)
from .sync import (
    FollowerState,
    ReceiverContext,
    SenderContext,
    follower_apply,
    leader_publish,
    retransmit_tick,
)
from .relay import Session, SessionHost
from .netsim import (
    EmulatedLink,
    EmulatedNetwork,
    EventLoop,
    InvalidExchange,
    LinkProfile,
    best_offset,
    calibrate_clock,
)
from .bench import (
    MetricsReport,
    Scenario,
    ScenarioTimeout,
    ZeroObjects,
    load_scenario,
    normalized_room_transfer,
    render_report,
    run_scenario,
    run_scenario_once,
)
from .nav import (
    MapFrame,
    MinimapConfig,
    SoundCue,
    TransparencyState,
    UserPose,
    XrayWindow,
    feature_latency_probe,
    place_xray_window,
    project_minimap,
    project_point,
    unproject_point,
    update_transparency,
)

__all__ = [name for name in dir() if not name.startswith("_")]
