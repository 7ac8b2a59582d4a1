"""Instance registry class for the builtin NSDP instances of cpathlab.

Provides the InstanceRegistry class, which maps builtin names to ``BuiltinInstance`` entries and
resolves ``rand-qmi-<seed>-<k>`` names on demand. Every entry is self-checked when it is loaded:
the known multipliers must make x* a KKT point and the closed-form path, when present, must satisfy
the barrier-KKT system at μ = 1e-2 and μ = 1e-4.
"""

import logging
from collections import UserDict
from typing import List, Optional

from cpathlab.builtin_instances import BUILTIN_FACTORIES, BuiltinInstance, builtin_instance, parse_rand_qmi
from cpathlab.exceptions import InstanceNotFoundError, ValidationError
from cpathlab.kkt import PrimalDualTriplet, bkkt_residual, kkt_residual

SELF_CHECK_TOL = 1e-10
SELF_CHECK_MUS = (1e-2, 1e-4)


def self_check(builtin: BuiltinInstance, tol: float = SELF_CHECK_TOL) -> None:
    """Verify the oracle of a builtin instance.

    Raises:
        ValidationError: If a known multiplier or a closed-form path point fails its residual check.

    """
    inst, oracle = builtin.instance, builtin.oracle
    for Y, z in oracle.multipliers:
        report = kkt_residual(inst, PrimalDualTriplet(oracle.xstar, Y, z))
        if not report.is_kkt(tol):
            raise ValidationError(f"{builtin.name}: oracle multiplier fails the KKT check ({report})")
    if oracle.Y_a is not None:
        report = kkt_residual(inst, PrimalDualTriplet(oracle.xstar, oracle.Y_a, oracle.z_a))
        if not report.is_kkt(tol):
            raise ValidationError(f"{builtin.name}: oracle analytic center fails the KKT check ({report})")
    if oracle.w_of_mu is not None:
        for mu in SELF_CHECK_MUS:
            residual = bkkt_residual(inst, oracle.w_of_mu(mu), mu).max
            if residual > tol:
                raise ValidationError(f"{builtin.name}: closed-form path fails at mu={mu:g} (residual {residual:.3e})")


class InstanceRegistry(UserDict):
    """Registry of builtin instances by name.

    Access patterns:
        - registry["deg-twin"] -> BuiltinInstance
        - "rand-qmi-7-3" in registry -> True (built and cached on first access)
        - registry.names() -> names of the fixed builtins

    All values in the registry are instances of BuiltinInstance.
    """

    def __init__(self, logger: Optional[logging.Logger] = None, check: bool = True):
        """Initialize the registry with the fixed builtins.

        Args:
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.
            check (bool): Self-check every entry when it is loaded.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.check = check
        super().__init__()
        for name, factory in BUILTIN_FACTORIES.items():
            self[name] = factory()

    def __setitem__(self, name: str, builtin: BuiltinInstance) -> None:
        """Store an entry after its self-check."""
        if not isinstance(builtin, BuiltinInstance):
            raise TypeError("registry values must be BuiltinInstance objects")
        if self.check:
            self_check(builtin)
            self.logger.debug(f"Builtin {name} passed its oracle self-check")
        super().__setitem__(name, builtin)

    def __contains__(self, name: object) -> bool:
        """Return True for stored names and for well-formed rand-qmi names."""
        return super().__contains__(name) or (isinstance(name, str) and parse_rand_qmi(name) is not None)

    def __missing__(self, name: str) -> BuiltinInstance:
        """Build rand-qmi entries on first access."""
        if isinstance(name, str) and parse_rand_qmi(name) is not None:
            self[name] = builtin_instance(name)
            return self.data[name]
        raise InstanceNotFoundError(
            f"Unknown instance '{name}' (registry: {', '.join(self.names())}, rand-qmi-<seed>-<k>)"
        )

    def names(self) -> List[str]:
        """Return the names of the fixed builtins in registration order."""
        return list(BUILTIN_FACTORIES)


_DEFAULT_REGISTRY: Optional[InstanceRegistry] = None


def default_registry() -> InstanceRegistry:
    """Return the process-wide registry, creating it on first use."""
    global _DEFAULT_REGISTRY
    if _DEFAULT_REGISTRY is None:
        _DEFAULT_REGISTRY = InstanceRegistry()
    return _DEFAULT_REGISTRY
