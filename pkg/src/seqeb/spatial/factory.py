from __future__ import annotations

from seqeb.errors import ConfigError
from seqeb.spatial.kernels import CorrelationKernel, ExponentialKernel, KernelKind
from seqeb.spatial.observation import GaussianFamily, ObservationFamily, PoissonFamily

_FAMILIES: dict[str, type[ObservationFamily]] = {
    "poisson": PoissonFamily,
    "gaussian": GaussianFamily,
}


def create_kernel(kind: str) -> CorrelationKernel:
    try:
        resolved = KernelKind(kind.lower())
    except ValueError:
        raise ConfigError(f"Unsupported kernel: {kind}. Use 'exponential'.") from None
    if resolved is KernelKind.EXPONENTIAL:
        return ExponentialKernel()
    raise ConfigError(f"Unsupported kernel: {kind}")


def create_family(name: str) -> ObservationFamily:
    family = _FAMILIES.get(name.lower())
    if family is None:
        raise ConfigError(
            f"Unsupported observation family: {name}. Use one of: {', '.join(sorted(_FAMILIES))}."
        )
    return family()
