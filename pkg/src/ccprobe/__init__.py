"""Deterministic laboratory for fingerprinting TCP congestion control.

A scripted prober provokes loss recovery in a simulated page server and
classifies the sender's congestion-control variant from the observed
trace alone.
"""

from .classifier import (
    ClassificationReport,
    ClassifierConfig,
    FeatureVector,
    classify,
    classify_trace,
    detect_reordering,
    detect_retransmissions,
    estimate_rtt,
)
from .errors import (
    CcprobeError,
    ConfigurationError,
    InternalError,
    ProtocolError,
    TraceIOError,
    TraceOrderError,
    TraceParseError,
)
from .netsim import (
    HttpServerEndpoint,
    Scenario,
    SimPort,
    SimWorld,
    TerminationReason,
    http_server_step,
    run_to_completion,
    sim_init,
)
from .prober import (
    ProbeOutcome,
    ProbeScript,
    ProbeSession,
    probe_handshake,
    run_probe,
)
from .sender import Sender, SenderConfig, Variant
from .traceio import (
    TraceEvent,
    emit_plot_points,
    read_trace,
    read_trace_file,
    write_plot_points,
    write_trace,
)
from .wire import Flag, Segment

__version__ = "0.1.0"

__all__ = [
    "CcprobeError",
    "ClassificationReport",
    "ClassifierConfig",
    "ConfigurationError",
    "FeatureVector",
    "Flag",
    "HttpServerEndpoint",
    "InternalError",
    "ProbeOutcome",
    "ProbeScript",
    "ProbeSession",
    "ProtocolError",
    "Scenario",
    "Segment",
    "Sender",
    "SenderConfig",
    "SimPort",
    "SimWorld",
    "TerminationReason",
    "TraceEvent",
    "TraceIOError",
    "TraceOrderError",
    "TraceParseError",
    "Variant",
    "classify",
    "classify_trace",
    "detect_reordering",
    "detect_retransmissions",
    "emit_plot_points",
    "estimate_rtt",
    "http_server_step",
    "probe_handshake",
    "read_trace",
    "read_trace_file",
    "run_probe",
    "run_to_completion",
    "sim_init",
    "write_plot_points",
    "write_trace",
    "__version__",
]
