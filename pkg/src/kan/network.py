"""
Kolmogorov-Arnold Network

Layered collection of spline edges with:
- Batched forward evaluation (node j of layer l+1 sums phi_{l,j,i} over inputs i)
- Mean squared error loss
- Exact reverse-mode gradients for every base and spline coefficient
- Canonical flattening to and from a parameter vector
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..splines import (
    GridSpec,
    SplineEdge,
    SplineError,
    basis_matrix,
    basis_derivative_matrix,
    refit_coefficients,
    silu,
    silu_derivative
)


CANONICAL_ORDER_VERSION = "kan-canonical-v1"
INPUT_DOMAIN = (-1.0, 1.0)
DEFAULT_HIDDEN_RANGE = 4.0


class KanModelError(ValueError):
    """Raised for dimension, layout or batch errors."""
    pass


class NonFiniteActivationError(KanModelError):
    """Raised when a layer produces or receives non-finite values."""

    def __init__(self, layer: int, message: str = ""):
        self.layer = layer
        super().__init__(f"Non-finite activation at layer {layer}" + (f": {message}" if message else ""))


def layer_domains(num_layers: int, hidden_range: float = DEFAULT_HIDDEN_RANGE) -> Tuple[Tuple[float, float], ...]:
    """Input layer works on [-1, 1]; hidden layers on [-s, s]."""
    if hidden_range <= 0:
        raise KanModelError(f"Hidden range must be positive, got {hidden_range}")
    return tuple(
        INPUT_DOMAIN if l == 0 else (-float(hidden_range), float(hidden_range))
        for l in range(num_layers)
    )


@dataclass(frozen=True)
class ParamLayout:
    """
    Descriptor of the canonical parameter order.

    Order is layer-major, then destination node, then source node; within an
    edge the base coefficient comes first, followed by c_0 .. c_{g+o-1}.
    """
    widths: Tuple[int, ...]
    order: int
    grid: int
    domains: Tuple[Tuple[float, float], ...]
    version: str = CANONICAL_ORDER_VERSION

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise KanModelError(f"Widths need at least two positive entries, got {self.widths}")
        domains = tuple((float(a), float(b)) for a, b in self.domains)
        if len(domains) != len(widths) - 1:
            raise KanModelError("One domain per layer is required")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "domains", domains)

    @property
    def num_layers(self) -> int:
        return len(self.widths) - 1

    @property
    def edge_size(self) -> int:
        return 1 + self.grid + self.order

    @property
    def omegas(self) -> Tuple[int, ...]:
        return tuple(self.widths[l] * self.widths[l + 1] for l in range(self.num_layers))

    @property
    def size(self) -> int:
        return sum(self.omegas) * self.edge_size

    def layer_offset(self, layer: int) -> int:
        return sum(self.omegas[:layer]) * self.edge_size

    def layer_slice(self, layer: int) -> slice:
        start = self.layer_offset(layer)
        return slice(start, start + self.omegas[layer] * self.edge_size)

    def edge_slice(self, layer: int, dest: int, src: int) -> slice:
        n_in, n_out = self.widths[layer], self.widths[layer + 1]
        if not (0 <= dest < n_out and 0 <= src < n_in):
            raise KanModelError(f"Edge ({layer}, {dest}, {src}) is outside widths {self.widths}")
        start = self.layer_offset(layer) + (dest * n_in + src) * self.edge_size
        return slice(start, start + self.edge_size)

    def grid_spec(self, layer: int) -> GridSpec:
        return GridSpec(order=self.order, grid=self.grid, domain=self.domains[layer])

    def with_grid(self, grid: int) -> "ParamLayout":
        return ParamLayout(self.widths, self.order, grid, self.domains, self.version)

    def describe(self) -> Dict[str, object]:
        return {
            "widths": list(self.widths),
            "order": self.order,
            "grid": self.grid,
            "domains": [list(d) for d in self.domains],
            "version": self.version
        }

    def fingerprint(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(eq=False)
class ParamVector:
    """Flat parameter vector paired with its layout."""
    values: np.ndarray
    layout: ParamLayout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.shape[0] != self.layout.size:
            raise KanModelError(
                f"Parameter vector has {self.values.shape[0]} entries, layout needs {self.layout.size}"
            )

    def __len__(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout)


@dataclass(eq=False)
class KanLayer:
    """Edges between two node layers, stored as dense arrays."""
    base: np.ndarray      # (n_out, n_in)
    coeffs: np.ndarray    # (n_out, n_in, g + o)
    grid: GridSpec

    @property
    def n_in(self) -> int:
        return self.base.shape[1]

    @property
    def n_out(self) -> int:
        return self.base.shape[0]

    def edge(self, dest: int, src: int) -> SplineEdge:
        return SplineEdge(base=self.base[dest, src], coeffs=self.coeffs[dest, src], grid=self.grid)

    def copy(self) -> "KanLayer":
        return KanLayer(self.base.copy(), self.coeffs.copy(), self.grid)


@dataclass
class LayerCache:
    inputs: np.ndarray
    activation: np.ndarray
    basis: np.ndarray
    mask: np.ndarray


@dataclass(eq=False)
class KanNetwork:
    """
    Multi-layer KAN with widths [n_0, ..., n_L].

    Every edge shares (order, grid); domains are fixed per layer.
    """
    layers: List[KanLayer] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise KanModelError("Network needs at least one layer")
        first = self.layers[0].grid
        for index, layer in enumerate(self.layers):
            if layer.grid.order != first.order or layer.grid.grid != first.grid:
                raise KanModelError(f"Layer {index} grid differs from layer 0")
            if layer.coeffs.shape != layer.base.shape + (layer.grid.num_basis,):
                raise KanModelError(f"Layer {index} coefficient shape mismatch")
            if index > 0 and layer.n_in != self.layers[index - 1].n_out:
                raise KanModelError(f"Layer {index} input width does not match previous output")

    @property
    def widths(self) -> Tuple[int, ...]:
        return (self.layers[0].n_in,) + tuple(layer.n_out for layer in self.layers)

    @property
    def order(self) -> int:
        return self.layers[0].grid.order

    @property
    def grid_size(self) -> int:
        return self.layers[0].grid.grid

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout(
            widths=self.widths,
            order=self.order,
            grid=self.grid_size,
            domains=tuple(layer.grid.domain for layer in self.layers)
        )

    def edge(self, layer: int, dest: int, src: int) -> SplineEdge:
        return self.layers[layer].edge(dest, src)

    def copy(self) -> "KanNetwork":
        return KanNetwork([layer.copy() for layer in self.layers])

    def load_values(self, values: np.ndarray) -> None:
        """Overwrite parameters in place from a canonical flat array."""
        layout = self.layout
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (layout.size,):
            raise KanModelError(f"Expected {layout.size} parameters, got {values.shape}")
        for index, layer in enumerate(self.layers):
            block = values[layout.layer_slice(index)].reshape(layer.n_out, layer.n_in, layout.edge_size)
            layer.base[...] = block[:, :, 0]
            layer.coeffs[...] = block[:, :, 1:]


def init_network(
    widths: Sequence[int],
    grid: int,
    order: int = 3,
    hidden_range: float = DEFAULT_HIDDEN_RANGE,
    seed: int = 0
) -> KanNetwork:
    """
    Random initial network.

    Base coefficients ~ Normal(0, 0.1); spline coefficients ~ Normal(0, 0.1 / sqrt(g + o)).
    """
    rng = np.random.default_rng(seed)
    widths = tuple(int(w) for w in widths)
    domains = layer_domains(len(widths) - 1, hidden_range)
    layers = []
    for index in range(len(widths) - 1):
        spec = GridSpec(order=order, grid=grid, domain=domains[index])
        n_in, n_out = widths[index], widths[index + 1]
        base = rng.normal(0.0, 0.1, size=(n_out, n_in))
        coeffs = rng.normal(0.0, 0.1 / math.sqrt(spec.num_basis), size=(n_out, n_in, spec.num_basis))
        layers.append(KanLayer(base, coeffs, spec))
    return KanNetwork(layers)


def flatten(net: KanNetwork) -> ParamVector:
    """Network parameters in canonical order."""
    blocks = [
        np.concatenate([layer.base[:, :, None], layer.coeffs], axis=2).reshape(-1)
        for layer in net.layers
    ]
    return ParamVector(np.concatenate(blocks), net.layout)


def unflatten(params: ParamVector, layout: Optional[ParamLayout] = None) -> KanNetwork:
    """
    Rebuild a network from a parameter vector.

    Args:
        params: Flat parameters (a ParamVector, or a raw array when layout is given)
        layout: Layout to interpret raw arrays with

    Returns:
        New KanNetwork owning copies of the values
    """
    if isinstance(params, ParamVector):
        if layout is not None and layout != params.layout:
            raise KanModelError("Parameter layout does not match the requested layout")
        values, layout = params.values, params.layout
    else:
        if layout is None:
            raise KanModelError("A layout is required to unflatten a raw array")
        values = np.asarray(params, dtype=np.float64).reshape(-1)
        if values.shape[0] != layout.size:
            raise KanModelError(f"Expected {layout.size} parameters, got {values.shape[0]}")

    layers = []
    for index in range(layout.num_layers):
        n_in, n_out = layout.widths[index], layout.widths[index + 1]
        block = values[layout.layer_slice(index)].reshape(n_out, n_in, layout.edge_size)
        layers.append(KanLayer(block[:, :, 0].copy(), block[:, :, 1:].copy(), layout.grid_spec(index)))
    return KanNetwork(layers)


def extend_network(net: KanNetwork, new_grid: int) -> KanNetwork:
    """Apply grid extension to every edge; base coefficients are copied."""
    layers = []
    for layer in net.layers:
        flat = layer.coeffs.reshape(-1, layer.grid.num_basis)
        refit = refit_coefficients(flat, layer.grid, new_grid)
        spec = layer.grid.with_grid(new_grid)
        layers.append(KanLayer(layer.base.copy(), refit.reshape(layer.n_out, layer.n_in, spec.num_basis), spec))
    return KanNetwork(layers)


def _as_batch(net: KanNetwork, inputs: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.widths[0]:
        raise KanModelError(f"Input dimension {x.shape[-1]} does not match n_0 = {net.widths[0]}")
    return x, single


def _as_targets(net: KanNetwork, targets: np.ndarray, batch: int) -> np.ndarray:
    y = np.asarray(targets, dtype=np.float64)
    y = y.reshape(batch, -1) if y.size == batch * net.widths[-1] else y
    if y.shape != (batch, net.widths[-1]):
        raise KanModelError(f"Targets of shape {np.shape(targets)} do not match batch {batch}")
    return y


def _layer_forward(index: int, layer: KanLayer, x: np.ndarray) -> Tuple[np.ndarray, LayerCache]:
    if not np.all(np.isfinite(x)):
        raise NonFiniteActivationError(index, "input")
    batch = x.shape[0]
    try:
        basis = basis_matrix(x, layer.grid).reshape(batch, layer.n_in, layer.grid.num_basis)
    except SplineError as e:
        raise NonFiniteActivationError(index, str(e)) from e
    mask = layer.grid.contains(x)
    basis = basis * mask[:, :, None]
    activation = silu(x)
    out = np.einsum("bi,ji->bj", activation, layer.base) + np.einsum("bip,jip->bj", basis, layer.coeffs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteActivationError(index, "output")
    return out, LayerCache(x, activation, basis, mask)


def _forward_with_cache(net: KanNetwork, x: np.ndarray) -> Tuple[np.ndarray, List[LayerCache]]:
    caches = []
    for index, layer in enumerate(net.layers):
        x, cache = _layer_forward(index, layer, x)
        caches.append(cache)
    return x, caches


def forward(net: KanNetwork, inputs: np.ndarray) -> np.ndarray:
    """
    Evaluate the network.

    Args:
        net: Network
        inputs: One sample of length n_0 or a batch of shape (B, n_0)

    Returns:
        Output of length n_L, or (B, n_L) for a batch
    """
    x, single = _as_batch(net, inputs)
    out, _ = _forward_with_cache(net, x)
    return out[0] if single else out


def loss(net: KanNetwork, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over the batch of the summed squared output error."""
    x, _ = _as_batch(net, inputs)
    if x.shape[0] == 0:
        raise KanModelError("Loss needs a non-empty batch")
    y = _as_targets(net, targets, x.shape[0])
    pred = forward(net, x)
    # fsum is exactly rounded, so the loss does not depend on batch order
    return math.fsum(((pred - y) ** 2).ravel()) / x.shape[0]


def gradients(net: KanNetwork, inputs: np.ndarray, targets: np.ndarray) -> ParamVector:
    """
    Exact gradient of `loss` with respect to every parameter.

    Returns:
        ParamVector in canonical order
    """
    x, _ = _as_batch(net, inputs)
    batch = x.shape[0]
    if batch == 0:
        raise KanModelError("Gradients need a non-empty batch")
    y = _as_targets(net, targets, batch)

    pred, caches = _forward_with_cache(net, x)
    upstream = 2.0 * (pred - y) / batch
    layout = net.layout
    grad = np.empty(layout.size, dtype=np.float64)

    for index in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[index]
        cache = caches[index]
        grad_base = np.einsum("bj,bi->ji", upstream, cache.activation)
        grad_coeffs = np.einsum("bj,bip->jip", upstream, cache.basis)
        grad[layout.layer_slice(index)] = np.concatenate(
            [grad_base[:, :, None], grad_coeffs], axis=2
        ).reshape(-1)

        if index > 0:
            dbasis = basis_derivative_matrix(cache.inputs, layer.grid).reshape(cache.basis.shape)
            dbasis = dbasis * cache.mask[:, :, None]
            slope = (
                np.einsum("ji,bi->bji", layer.base, silu_derivative(cache.inputs))
                + np.einsum("jip,bip->bji", layer.coeffs, dbasis)
            )
            upstream = np.einsum("bj,bji->bi", upstream, slope)
            if not np.all(np.isfinite(upstream)):
                raise NonFiniteActivationError(index, "gradient")

    return ParamVector(grad, layout)
