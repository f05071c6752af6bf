"""Reference inference server speaking the /infer wire protocol.

Hosts models named by the weight-file convention behind a small JSON
protocol: POST /infer with {weight_id, mode, class_count, image} returns
class probabilities (mode 0) or a base64 PNG mask with its foreground
fraction (mode 1).  A deterministic stub loader reproduces the caller's
built-in test rules; real serialized formats plug in via register_loader.
"""
from .errors import AdapterError, ConfigError, DecodeFailure
from .manifest import HostedModel, LoaderSpec, load_manifest
from .models import StubModel, build_model, register_loader
from .preprocess import TARGET_SIZE, decode_image, equalize_channel, preprocess_bytes
from .service import build_app

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AdapterError",
    "ConfigError",
    "DecodeFailure",
    "HostedModel",
    "LoaderSpec",
    "StubModel",
    "TARGET_SIZE",
    "build_app",
    "build_model",
    "decode_image",
    "equalize_channel",
    "load_manifest",
    "preprocess_bytes",
    "register_loader",
]
