"""Exception hierarchy for the whole toolkit.

Every failure mode that callers are expected to distinguish gets its own
class; messages carry the offending value or command line.
"""

from __future__ import annotations


class ForgebenchError(Exception):
    """Base class for all toolkit errors."""


# --- image codec ---------------------------------------------------------

class MalformedStream(ForgebenchError):
    """Encoded image bytes are truncated or not a recognizable stream."""


class UnsupportedFormat(ForgebenchError):
    """Stream decodes to a pixel layout outside the 8-bit RGB/gray subset."""


class InvalidQuality(ForgebenchError):
    """JPEG quality outside [1, 100]."""


# --- operator parameters --------------------------------------------------

class InvalidParameter(ForgebenchError, ValueError):
    """Base class for operator parameter violations."""


class NegativeSigma(InvalidParameter):
    pass


class NegativeParameter(InvalidParameter):
    pass


class EvenKernel(InvalidParameter):
    pass


class NonPositiveKernel(InvalidParameter):
    pass


class NonPositiveGamma(InvalidParameter):
    pass


class OutOfRangeBeta(InvalidParameter):
    pass


class NonPositiveAlpha(InvalidParameter):
    pass


class NonPositiveAmount(InvalidParameter):
    pass


class ImageTooSmall(InvalidParameter):
    pass


class InvalidCrf(InvalidParameter):
    pass


class UnknownCategory(ForgebenchError):
    """Operation category not in the declared catalog."""


class BadOperationSpec(ForgebenchError):
    """Operation parameters do not match the category's schema."""


# --- external plugins -----------------------------------------------------

class PluginError(ForgebenchError):
    pass


class PluginNotConfigured(PluginError):
    """Operation requires an external command template but none is set."""


class PluginLaunchFailure(PluginError):
    """External plugin could not be started or exited non-zero."""


class PluginTimeout(PluginError):
    """External plugin exceeded its wall-clock budget."""


class PluginBadOutput(PluginError):
    """Plugin finished but its output is missing or undecodable."""


class DimensionMismatch(PluginError):
    """Plugin returned an image whose dimensions differ from the input."""


class FrameCountMismatch(PluginError):
    """Transcoded clip came back with a different number of frames."""


# --- manifest / harness ----------------------------------------------------

class ManifestError(ForgebenchError):
    pass


class ParseError(ManifestError):
    """Malformed manifest or records line; message carries the line number."""


class DuplicateId(ManifestError):
    pass


class UnknownLabel(ManifestError):
    pass


class AdapterError(ForgebenchError):
    pass


class AdapterHandshakeFailure(AdapterError):
    """Adapter did not produce a valid hello message."""


class AdapterCrash(AdapterError):
    """Adapter process died and the restart budget is exhausted."""


class ProtocolViolation(AdapterError):
    """Adapter reply is malformed or out of contract (e.g. score not in [0,1])."""


class SampleTimeout(AdapterError):
    """No reply for one sample within the per-sample budget."""


class AdapterReportedError(AdapterError):
    """Adapter answered a request with {"type": "error", ...}."""


class InvalidConfig(ForgebenchError):
    """Sweep or augmentation configuration violates its invariants."""


# --- metrics / reporting ---------------------------------------------------

class EmptyClass(ForgebenchError):
    """AUC requested with no real or no fake scores."""


class UnknownFormat(ForgebenchError):
    """Unrecognized report output format."""
