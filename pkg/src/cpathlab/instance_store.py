"""Abstract base class for NSDP instance storage backends in cpathlab.

Defines the InstanceStore interface for loading and saving problem instances.
"""
from typing import Optional
import logging
from abc import ABC, abstractmethod

from cpathlab.nsdp_model import NsdpInstance


class InstanceStore(ABC):
    """Abstract base class for NSDP instance storage backends.

    Subclasses should implement methods for loading and saving instances.
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        """Initialize the instance store with an optional logger.

        Args:
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def load(self, path: str) -> NsdpInstance:
        """Load an instance from the specified path.

        Args:
            path (str): The path to the file to load from.

        Returns:
            NsdpInstance: The loaded instance.

        """
        pass

    @abstractmethod
    def save(self, instance: NsdpInstance, path: str) -> None:
        """Save an instance to the specified path.

        Args:
            instance (NsdpInstance): The instance to save.
            path (str): The path to the file to save to.

        """
        pass
