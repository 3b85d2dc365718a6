"""
Dense tensor storage for the library.

A Tensor is an immutable rank-1 or rank-2 array of 64-bit floats in
row-major order. Batches are rank-2 (batch x features). The buffer is a
read-only numpy array so tensors can be shared between threads.
"""

from typing import Any, List, Sequence, Tuple, Union

import numpy as np

from utils.errors import DimensionError


class Tensor:
    """Immutable dense array of float64 values with rank 1 or 2."""

    __slots__ = ("_array",)

    def __init__(self, values: Any, shape: Union[Sequence[int], None] = None):
        """
        Build a tensor from nested lists, scalars or a numpy array.

        Args:
            values: Data; scalars become shape (1,)
            shape: Optional target shape; the data is reshaped to it

        Raises:
            DimensionError: If the shape does not match the data or rank > 2
        """
        if isinstance(values, Tensor):
            values = values.array
        array = np.array(values, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1)
        if shape is not None:
            shape = tuple(int(d) for d in shape)
            if int(np.prod(shape)) != array.size:
                raise DimensionError(f"cannot reshape {array.size} values to shape {list(shape)}")
            array = array.reshape(shape)
        if array.ndim > 2:
            raise DimensionError(f"tensors have rank 1 or 2, got shape {list(array.shape)}")
        array = np.ascontiguousarray(array)
        array.setflags(write=False)
        self._array = array

    @classmethod
    def wrap(cls, array: np.ndarray) -> "Tensor":
        """
        Wrap an array without copying.

        The caller hands the buffer over and must not mutate it afterwards.
        """
        tensor = cls.__new__(cls)
        array = np.ascontiguousarray(array, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1)
        if array.ndim > 2:
            raise DimensionError(f"tensors have rank 1 or 2, got shape {list(array.shape)}")
        view = array.view()
        view.setflags(write=False)
        tensor._array = view
        return tensor

    @classmethod
    def zeros(cls, *shape: int) -> "Tensor":
        return cls.wrap(np.zeros(shape))

    @classmethod
    def ones(cls, *shape: int) -> "Tensor":
        return cls.wrap(np.ones(shape))

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the data."""
        return self._array

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major buffer."""
        return self._array.reshape(-1)

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return self._array.size

    def item(self) -> float:
        if self._array.size != 1:
            raise DimensionError(f"item() needs a single value, shape is {list(self.shape)}")
        return float(self._array.reshape(-1)[0])

    def tolist(self) -> List[Any]:
        return self._array.tolist()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._array)))

    def reshape(self, *shape: int) -> "Tensor":
        return Tensor(self._array, shape)

    def __len__(self) -> int:
        return self._array.shape[0]

    def __getitem__(self, index):
        return self._array[index]

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)}, data={self._array.tolist()})"


def as_array(value: Union[Tensor, np.ndarray, Sequence[float], float]) -> np.ndarray:
    """Return the float64 array behind a tensor-like value."""
    if isinstance(value, Tensor):
        return value.array
    return np.asarray(value, dtype=np.float64)


def matvec(m: Tensor, v: Tensor) -> Tensor:
    """
    Matrix-vector product.

    Args:
        m: Rank-2 tensor [r x c]
        v: Rank-1 tensor [c]

    Returns:
        Rank-1 tensor [r]

    Raises:
        DimensionError: If ranks or inner dimensions do not match
    """
    if m.rank != 2 or v.rank != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError(f"matvec shape mismatch: matrix {list(m.shape)} and vector {list(v.shape)}")
    return Tensor.wrap(m.array @ v.array)
