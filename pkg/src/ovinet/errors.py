"""Exception hierarchy shared by all ovinet components."""


class OvinetError(Exception):
    """Base class for every error raised by this package."""


# --- scene generation ---------------------------------------------------

class InvalidParamsError(OvinetError):
    pass


class PlacementInfeasibleError(OvinetError):
    def __init__(self, scene_id, placed, requested):
        self.scene_id = scene_id
        self.placed = placed
        self.requested = requested
        super().__init__(
            f"scene {scene_id!r}: placed {placed}/{requested} eggs before "
            f"running out of room"
        )


# --- detector -----------------------------------------------------------

class DimensionMismatchError(OvinetError):
    pass


class SnapshotCountError(OvinetError):
    pass


# --- telemetry / codec --------------------------------------------------

class TelemetryValidationError(OvinetError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class LppRangeError(OvinetError):
    pass


class TooManyReadingsError(OvinetError):
    pass


class TruncatedFrameError(OvinetError):
    pass


class UnknownTypeError(OvinetError):
    pass


class DuplicateChannelError(OvinetError):
    pass


# --- device -------------------------------------------------------------

class InvalidConfigError(OvinetError):
    def __init__(self, fields, message=None):
        self.fields = list(fields)
        super().__init__(message or f"invalid config fields: {', '.join(self.fields)}")


class NotOperatingError(OvinetError):
    pass


class UnknownCommandError(OvinetError):
    pass


# --- network ------------------------------------------------------------

class PayloadSizeError(OvinetError):
    pass


class NotJoinedError(OvinetError):
    pass


class BadCredentialsError(OvinetError):
    pass


class ReplayedNonceError(OvinetError):
    pass


class NotConnectedError(OvinetError):
    pass


class DeliveryFailedError(OvinetError):
    pass


# --- platform -----------------------------------------------------------

class UnknownDeviceError(OvinetError):
    pass


class DuplicateDeviceError(OvinetError):
    pass


class DeviceFaultError(OvinetError):
    pass


class InvalidRangeError(OvinetError):
    pass


class UnknownRequestError(OvinetError):
    pass


# --- provisioner / scenario ----------------------------------------------

class UnreachableDeviceError(OvinetError):
    pass


class ProvisioningValidationError(OvinetError):
    def __init__(self, fields):
        self.fields = list(fields)
        super().__init__(f"invalid form fields: {', '.join(self.fields)}")


class RpcTimeoutError(OvinetError):
    pass


class ScenarioValidationError(OvinetError):
    pass
