from __future__ import annotations


class SquidFaninError(Exception):
    """Base class for toolkit errors. `exit_code` is what the CLI returns for it."""

    exit_code: int = 1
    error_code: str = 'toolkit_error'


class ArgumentError(SquidFaninError, ValueError):
    exit_code = 2
    error_code = 'invalid_argument'


class CapacityError(ArgumentError):
    error_code = 'capacity_exceeded'


class UnreachableThresholdError(ArgumentError):
    error_code = 'unreachable_threshold'

    def __init__(self, fraction: float, message: str | None = None) -> None:
        self.fraction = fraction
        super().__init__(
            message or f'threshold unreachable: activity fraction {fraction:.6g} exceeds 1'
        )


class SaturationViolationError(ArgumentError):
    error_code = 'saturation_violation'


class IntegrationFailureError(SquidFaninError):
    exit_code = 3
    error_code = 'integration_failure'

    def __init__(self, message: str, phi_applied: float | None = None) -> None:
        self.phi_applied = phi_applied
        if phi_applied is not None:
            message = f'{message} (phi_applied={phi_applied:.12g})'
        super().__init__(message)


class NoThresholdError(SquidFaninError):
    exit_code = 3
    error_code = 'no_threshold'


class ConstraintViolationError(SquidFaninError):
    exit_code = 4
    error_code = 'constraint_violation'


class VerificationDisagreementError(SquidFaninError):
    exit_code = 5
    error_code = 'verification_disagreement'
