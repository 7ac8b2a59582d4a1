"""JSON instance store class for QMI instance storage in cpathlab.

Provides the JSONInstanceStore class for loading and saving quadratic matrix inequality
instances to and from JSON files with keys ``name, n, m, s, f:{c0,c,Q}, G:{A0,A,B?}, h:{b,H,M?}``.
Matrices are row-major nested arrays; omitted ``B``/``M`` mean affine G/h.
"""

import json
import os
from typing import Any, Dict

import numpy as np

from cpathlab.exceptions import ValidationError
from cpathlab.instance_store import InstanceStore
from cpathlab.nsdp_model import NsdpInstance, QmiData, QmiInstance


class JSONInstanceStore(InstanceStore):
    """Instance store for QMI instances in JSON format.

    Inherits logging from InstanceStore.
    """

    def load(self, path: str) -> QmiInstance:
        """Load a QMI instance from a JSON file.

        Args:
            path (str): The path to the JSON file to load.

        Returns:
            QmiInstance: The validated instance.

        Raises:
            RuntimeError: If the file cannot be read or parsed.
            ValidationError: If a block is missing, asymmetric or has the wrong shape.

        """
        try:
            with open(path, "r", encoding="utf-8") as json_file:
                doc = json.load(json_file)
        except OSError as e:
            raise RuntimeError(f"Failed to read instance data from JSON file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise RuntimeError(f"Failed to parse JSON file {path}: {e}") from e

        if not isinstance(doc, dict):
            raise ValidationError(f"Invalid instance structure in JSON file {path}: top level must be an object.")
        missing = [key for key in ("name", "n", "m", "s", "f", "G", "h") if key not in doc]
        if missing:
            raise ValidationError(f"Invalid instance structure in JSON file {path}: missing {', '.join(missing)}.")

        f, G, h = doc["f"], doc["G"], doc["h"]
        try:
            n, m, s = int(doc["n"]), int(doc["m"]), int(doc["s"])
            data = self._data_from_dict(doc, f, G, h, n, s)
        except ValidationError:
            raise
        except (TypeError, ValueError, KeyError, AttributeError) as e:
            raise ValidationError(f"Invalid instance data in JSON file {path}: {e}") from e
        instance = QmiInstance(data)
        expected = {"n": n, "m": m, "s": s}
        if data.dims != expected:
            raise ValidationError(
                f"Dimension mismatch in JSON file {path}: declared {expected}, blocks give {data.dims}"
            )
        self.logger.debug(f"Loaded QMI instance {instance.name} from {path}")
        return instance

    @staticmethod
    def _data_from_dict(doc, f, G, h, n: int, s: int) -> QmiData:
        return QmiData(
            name=str(doc["name"]),
            A0=np.array(G["A0"], dtype=float),
            A=np.array(G["A"], dtype=float),
            c=np.array(f.get("c", [0.0] * n), dtype=float),
            Q=np.array(f.get("Q", np.zeros((n, n)).tolist()), dtype=float),
            H=np.array(h.get("H", []), dtype=float).reshape(0, n) if s == 0 else np.array(h["H"], dtype=float),
            b=np.array(h.get("b", [0.0] * s), dtype=float),
            c0=float(f.get("c0", 0.0)),
            B=np.array(G["B"], dtype=float) if G.get("B") is not None else None,
            M=np.array(h["M"], dtype=float) if h.get("M") is not None else None,
            description=str(doc.get("description", "")),
        )

    def save(self, instance: NsdpInstance, path: str) -> None:
        """Save a QMI instance to a JSON file.

        Args:
            instance (NsdpInstance): A QmiInstance (other instances have no file representation).
            path (str): The path to the JSON file to write.

        Raises:
            ValidationError: If the instance is not a QmiInstance.
            RuntimeError: If the file cannot be written.

        """
        if not isinstance(instance, QmiInstance):
            raise ValidationError(f"{instance.name}: only QMI instances can be saved as JSON")

        # Create the destination folder if it does not exist
        dir_name = os.path.dirname(path)
        if dir_name:
            os.makedirs(dir_name, exist_ok=True)

        try:
            with open(path, "w", encoding="utf-8") as json_file:
                json.dump(self.to_dict(instance), json_file, indent=4, sort_keys=False)
            self.logger.info(f"QMI instance saved as JSON to {path}")
        except OSError as e:
            raise RuntimeError(f"Failed to write JSON file {path}: {e}") from e

    @staticmethod
    def to_dict(instance: QmiInstance) -> Dict[str, Any]:
        """Return the JSON document of a QMI instance."""
        d = instance.to_data()
        G: Dict[str, Any] = {"A0": d.A0.tolist(), "A": d.A.tolist()}
        if d.B is not None:
            G["B"] = d.B.tolist()
        h: Dict[str, Any] = {"b": d.b.tolist(), "H": d.H.tolist()}
        if d.M is not None:
            h["M"] = d.M.tolist()
        return {
            "name": d.name,
            "description": d.description,
            "n": instance.n,
            "m": instance.m,
            "s": instance.s,
            "f": {"c0": d.c0, "c": d.c.tolist(), "Q": d.Q.tolist()},
            "G": G,
            "h": h,
        }
