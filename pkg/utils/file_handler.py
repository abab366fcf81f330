"""
File Handler - Reads and writes matrix, instance and report files

Matrix JSON: {"dim": d, "matrix": [[[re, im], ...], ...]} with d rows of d
[re, im] pairs. An instance file holds "hamiltonian", "state" and optionally
"estimator" matrices plus an optional "label".
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from processors.exceptions import DimMismatch, ValidationError
from processors.linalg import DensityMatrix, HermitianOperator, check_same_dim

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InstanceFile:
    """One (H, rho[, T]) problem instance"""

    hamiltonian: HermitianOperator
    state: DensityMatrix
    estimator: HermitianOperator | None = None
    label: str | None = None

    def __post_init__(self):
        operators = [self.hamiltonian, self.state]
        if self.estimator is not None:
            operators.append(self.estimator)
        check_same_dim(*operators)

    @property
    def dim(self) -> int:
        return self.state.dim


def dump_json(data: Any) -> str:
    """Deterministic JSON text; each float is its shortest round-trip repr (at most 17 significant digits)"""
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


class FileHandler:
    """Handles all file operations"""

    @staticmethod
    def matrix_to_json(operator) -> dict[str, Any]:
        a = np.asarray(operator, dtype=complex)
        return {
            "dim": int(a.shape[0]),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in a],
        }

    @staticmethod
    def matrix_from_json(obj: Any, name: str = "matrix") -> np.ndarray:
        """
        Parse a matrix JSON object.

        Returns:
            np.ndarray: complex dim x dim array (not yet validated as Hermitian)
        """
        if not isinstance(obj, dict) or "dim" not in obj or "matrix" not in obj:
            raise ValidationError(f"{name}: expected an object with 'dim' and 'matrix'")
        dim = obj["dim"]
        rows = obj["matrix"]
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ValidationError(f"{name}: 'dim' must be a positive integer")
        if not isinstance(rows, list) or len(rows) != dim or any(
            not isinstance(row, list) or len(row) != dim for row in rows
        ):
            raise DimMismatch(f"{name}: 'matrix' must have {dim} rows of {dim} entries")

        try:
            pairs = np.array(rows, dtype=float)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{name}: entries must be [re, im] pairs of numbers") from e
        if pairs.shape != (dim, dim, 2):
            raise ValidationError(f"{name}: entries must be [re, im] pairs of numbers")
        return pairs[..., 0] + 1j * pairs[..., 1]

    def load_matrix(self, path: str | Path, kind: type = HermitianOperator):
        data = self._read_json(path)
        return kind(self.matrix_from_json(data, Path(path).name))

    def save_matrix(self, operator, path: str | Path) -> Path:
        return self.write_text(path, dump_json(self.matrix_to_json(operator)))

    def load_instance(self, path: str | Path) -> InstanceFile:
        """
        Load and validate an instance file.

        Returns:
            InstanceFile: H and T validated as Hermitian, rho as a density matrix
        """
        data = self._read_json(path)
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: expected a JSON object")
        for key in ("hamiltonian", "state"):
            if key not in data:
                raise ValidationError(f"{path}: missing '{key}'")

        label = data.get("label")
        if label is not None and not isinstance(label, str):
            raise ValidationError(f"{path}: 'label' must be a string")

        hamiltonian = HermitianOperator(self.matrix_from_json(data["hamiltonian"], "hamiltonian"))
        state = DensityMatrix(self.matrix_from_json(data["state"], "state"))
        estimator = None
        if data.get("estimator") is not None:
            estimator = HermitianOperator(self.matrix_from_json(data["estimator"], "estimator"))
        logger.debug("loaded instance %s (dim %d)", label or path, state.dim)
        return InstanceFile(hamiltonian, state, estimator, label)

    def instance_to_json(self, instance: InstanceFile) -> dict[str, Any]:
        data: dict[str, Any] = {}
        if instance.label is not None:
            data["label"] = instance.label
        data["hamiltonian"] = self.matrix_to_json(instance.hamiltonian)
        data["state"] = self.matrix_to_json(instance.state)
        if instance.estimator is not None:
            data["estimator"] = self.matrix_to_json(instance.estimator)
        return data

    def save_instance(self, instance: InstanceFile, path: str | Path) -> Path:
        return self.write_text(path, dump_json(self.instance_to_json(instance)))

    def write_text(self, path: str | Path, text: str) -> Path:
        path = Path(path)
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return path

    def _read_json(self, path: str | Path) -> Any:
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path} is not valid JSON: {e}") from e
