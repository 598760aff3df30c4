"""
Federated KAN Simulator

Runs communication rounds of federated averaging over KAN clients:

1. sample clients and broadcast the global model
2. extend the spline grid when the schedule steps up
3. train locally on every sampled client
4. upload dense, or sparsified under the per-round bit budget
5. densify on the server, average, evaluate
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..benchmarks import SplitDataset, rmse
from ..common import client_train_seed, derive_seed
from ..compression import (
    CompressionError,
    CostModel,
    SparsifierKind,
    SparsityPlan,
    decode,
    densify,
    encode,
    solve_ratio,
    sparsify_network,
    uplink_cost
)
from ..kan import (
    DEFAULT_HIDDEN_RANGE,
    KanNetwork,
    ParamVector,
    TrainConfig,
    TrainingDivergedError,
    extend_network,
    flatten,
    init_network,
    train_local_with_history,
    unflatten
)
from .schedule import GridSchedule, grid_size_at


logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Raised when a round cannot complete; carries the round and client."""

    def __init__(self, message: str, round_index: Optional[int] = None, client_id: Optional[int] = None):
        self.round_index = round_index
        self.client_id = client_id
        context = []
        if round_index is not None:
            context.append(f"round {round_index}")
        if client_id is not None:
            context.append(f"client {client_id}")
        super().__init__(f"{message} ({', '.join(context)})" if context else message)


class AggregationFill(Enum):
    """How coefficients a client did not send enter the average."""
    BROADCAST = "broadcast"            # filled with the round's broadcast value
    COUNT_WEIGHTED = "count-weighted"  # averaged over the clients that sent them


@dataclass(frozen=True)
class FLConfig:
    """
    Federation settings.

    budget is the per-client uplink budget in bits per round; None means
    unlimited (never sparsify).
    """
    num_clients: int
    rounds: int
    participation_fraction: float = 0.1
    train: TrainConfig = field(default_factory=TrainConfig)
    budget: Optional[int] = None
    seed: int = 0
    order: int = 3
    hidden_range: float = DEFAULT_HIDDEN_RANGE
    bits_per_coeff: int = 32
    sparsifier: SparsifierKind = SparsifierKind.TOP_K
    fill: AggregationFill = AggregationFill.BROADCAST
    max_workers: int = 1
    log_every: int = 10

    def __post_init__(self):
        if self.num_clients < 1:
            raise ValueError(f"num_clients must be >= 1, got {self.num_clients}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0 < self.participation_fraction <= 1:
            raise ValueError(f"participation_fraction must lie in (0, 1], got {self.participation_fraction}")
        if self.budget is not None and self.budget < 0:
            raise ValueError(f"budget must be >= 0 bits, got {self.budget}")
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {self.max_workers}")
        if not isinstance(self.sparsifier, SparsifierKind):
            object.__setattr__(self, "sparsifier", SparsifierKind(self.sparsifier))
        if not isinstance(self.fill, AggregationFill):
            object.__setattr__(self, "fill", AggregationFill(self.fill))

    @property
    def clients_per_round(self) -> int:
        return max(1, int(round(self.participation_fraction * self.num_clients)))


@dataclass
class ClientUpdate:
    """What the server receives from one client, after decoding."""
    client_id: int
    params: ParamVector
    sent: Optional[np.ndarray]
    train_loss: float
    bits: int
    layout_fingerprint: str


@dataclass
class RoundMetrics:
    """
    Record of one round.

    bits_total is the upload of one client (all clients of a round send the
    same shape); client_bits holds each client's measured size.
    """
    round_index: int
    grid: int
    bits_total: int
    bits_budget: Optional[int]
    rho: float
    rmse: float
    train_loss: float
    k: Optional[int] = None
    sparsified: bool = False
    extended: bool = False
    clients: Tuple[int, ...] = ()
    client_bits: Dict[int, int] = field(default_factory=dict)
    layout_fingerprint: str = ""

    @property
    def uplink_bits(self) -> int:
        return sum(self.client_bits.values())

    def to_row(self) -> Dict[str, object]:
        return {
            "round": self.round_index,
            "grid": self.grid,
            "bits_total": self.bits_total,
            "bits_budget": self.bits_budget,
            "rho": self.rho,
            "rmse": self.rmse,
            "train_loss": self.train_loss
        }


@dataclass(eq=False)
class SimulationState:
    """Server-side state between rounds."""
    config: FLConfig
    schedule: GridSchedule
    data: SplitDataset
    cost_model: CostModel
    global_model: KanNetwork
    next_round: int = 0


@dataclass(eq=False)
class ExperimentResult:
    metrics: List[RoundMetrics]
    final_model: KanNetwork
    seeds: Dict[str, int]

    @property
    def final_rmse(self) -> float:
        return self.metrics[-1].rmse

    @property
    def total_uplink_bits(self) -> int:
        return sum(m.uplink_bits for m in self.metrics)


MetricsSink = Callable[[RoundMetrics], None]


def sample_clients(t: int, cfg: FLConfig) -> Tuple[int, ...]:
    """
    Clients participating in round t, in ascending id order.

    Uniform without replacement; the draw depends only on (cfg.seed, t).
    """
    m = cfg.clients_per_round
    if m >= cfg.num_clients:
        return tuple(range(cfg.num_clients))
    rng = np.random.default_rng([derive_seed(cfg.seed, "sampling"), t])
    return tuple(sorted(int(k) for k in rng.choice(cfg.num_clients, size=m, replace=False)))


def aggregate(
    updates: Sequence[ParamVector],
    reference: ParamVector,
    masks: Optional[Sequence[np.ndarray]] = None,
    fill: AggregationFill = AggregationFill.BROADCAST
) -> ParamVector:
    """
    Coordinatewise mean of client updates.

    Updates are summed in the order given; callers pass them by ascending
    client id so the result does not depend on execution order.

    Args:
        updates: Densified client parameter vectors
        reference: Broadcast global model of the round
        masks: Per-update boolean masks of the entries actually sent
        fill: Treatment of entries a client did not send

    Returns:
        Aggregated ParamVector
    """
    if not updates:
        raise SimulationError("Cannot aggregate an empty set of updates")
    layout = reference.layout
    for update in updates:
        if update.layout != layout:
            raise SimulationError("Update layout does not match the reference layout")

    if fill is AggregationFill.BROADCAST or masks is None:
        total = np.zeros(layout.size)
        for update in updates:
            total = total + update.values
        return ParamVector(total / len(updates), layout)

    total = np.zeros(layout.size)
    count = np.zeros(layout.size)
    for update, mask in zip(updates, masks):
        total = total + np.where(mask, update.values, 0.0)
        count = count + mask
    mean = np.where(count > 0, total / np.maximum(count, 1), reference.values)
    return ParamVector(mean, layout)


class FederatedSimulator:
    """
    Round-by-round driver of one federated experiment.

    Server state is mutated only between rounds; client work is submitted to a
    thread pool and reduced in ascending client-id order.
    """

    def __init__(
        self,
        config: FLConfig,
        schedule: GridSchedule,
        data: SplitDataset,
        widths: Sequence[int],
        initial_model: Optional[KanNetwork] = None
    ):
        if data.num_clients != config.num_clients:
            raise SimulationError(
                f"Dataset has {data.num_clients} clients, configuration expects {config.num_clients}"
            )
        self.seeds = {name: derive_seed(config.seed, name) for name in ("init", "sampling", "training")}
        if initial_model is None:
            initial_model = init_network(
                widths, schedule.g0, config.order, config.hidden_range, seed=self.seeds["init"]
            )
        if initial_model.grid_size != grid_size_at(0, schedule):
            raise SimulationError("Initial model grid does not match the schedule's g0")

        self.state = SimulationState(
            config=config,
            schedule=schedule,
            data=data,
            cost_model=CostModel.from_widths(initial_model.widths, initial_model.order, config.bits_per_coeff),
            global_model=initial_model
        )

    @property
    def config(self) -> FLConfig:
        return self.state.config

    def sparsity_plan(self, grid: int) -> Optional[SparsityPlan]:
        """Plan for the grid when the dense upload exceeds the budget, else None."""
        budget = self.config.budget
        if budget is None or uplink_cost(grid, self.state.cost_model) <= budget:
            return None
        return solve_ratio(grid, self.state.cost_model, budget)

    def _client_update(
        self,
        t: int,
        client_id: int,
        broadcast: KanNetwork,
        grid: int,
        reference: ParamVector,
        plan: Optional[SparsityPlan]
    ) -> ClientUpdate:
        cfg = self.config
        model = extend_network(broadcast, grid) if broadcast.grid_size != grid else broadcast
        fingerprint = model.layout.fingerprint()

        client = self.state.data.clients[client_id]
        train_cfg = replace(cfg.train, seed=client_train_seed(self.seeds["training"], t, client_id))
        try:
            trained, history = train_local_with_history(model, client.inputs, client.targets, train_cfg)
        except TrainingDivergedError as e:
            raise SimulationError(f"Local training diverged: {e}", t, client_id) from e
        logger.debug("Round %d client %d: train loss %.6e", t, client_id, history[-1])

        params = flatten(trained)
        if plan is None:
            return ClientUpdate(
                client_id=client_id,
                params=params,
                sent=None,
                train_loss=history[-1],
                bits=uplink_cost(grid, self.state.cost_model),
                layout_fingerprint=fingerprint
            )

        try:
            payload = sparsify_network(
                params,
                plan.retained_per_edge,
                cfg.sparsifier,
                cfg.bits_per_coeff,
                seed=client_train_seed(self.seeds["sampling"], t, client_id),
                round_index=t,
                client_id=client_id
            )
            encoded = encode(payload)
            received = decode(encoded.data, grid, cfg.order, plan.retained_per_edge, cfg.bits_per_coeff)
            dense, sent = densify(received, reference)
        except CompressionError as e:
            raise SimulationError(f"Upload failed: {e}", t, client_id) from e
        if encoded.body_bits != payload.total_bits:
            raise SimulationError(
                f"Encoder wrote {encoded.body_bits} bits, cost model expects {payload.total_bits}", t, client_id
            )
        return ClientUpdate(
            client_id=client_id,
            params=dense,
            sent=sent,
            train_loss=history[-1],
            bits=encoded.body_bits,
            layout_fingerprint=fingerprint
        )

    def _collect(self, t: int, clients: Sequence[int], work) -> Dict[int, ClientUpdate]:
        if self.config.max_workers == 1 or len(clients) == 1:
            return {k: work(k) for k in clients}

        results: Dict[int, ClientUpdate] = {}
        with ThreadPoolExecutor(max_workers=self.config.max_workers) as executor:
            future_to_client = {executor.submit(work, k): k for k in clients}
            for future in as_completed(future_to_client):
                results[future_to_client[future]] = future.result()
        return results

    def run_round(self, t: Optional[int] = None) -> RoundMetrics:
        """
        Execute one round and advance the global model.

        Args:
            t: Round index; defaults to the next round of the state

        Returns:
            RoundMetrics of the round
        """
        state = self.state
        cfg = state.config
        t = state.next_round if t is None else t
        grid = grid_size_at(t, state.schedule)
        broadcast = state.global_model
        extended = broadcast.grid_size != grid
        if extended:
            logger.info("Round %d: extending grid %d -> %d", t, broadcast.grid_size, grid)

        reference_model = extend_network(broadcast, grid) if extended else broadcast
        reference = flatten(reference_model)
        plan = self.sparsity_plan(grid)
        if plan is not None and (t == 0 or extended):
            logger.info(
                "Round %d: sparsifying uploads, k=%d rho=%.3f bits=%d budget=%d",
                t, plan.retained_per_edge, plan.ratio, plan.total_bits, cfg.budget
            )

        clients = sample_clients(t, cfg)
        results = self._collect(
            t, clients, lambda k: self._client_update(t, k, broadcast, grid, reference, plan)
        )
        updates = [results[k] for k in clients]

        fingerprints = {u.layout_fingerprint for u in updates}
        if fingerprints != {reference.layout.fingerprint()}:
            raise SimulationError("Clients disagree on the extended layout", t)
        if plan is not None:
            over = [u for u in updates if u.bits > cfg.budget]
            if over:
                raise SimulationError(
                    f"Upload of {over[0].bits} bits exceeds the budget {cfg.budget}", t, over[0].client_id
                )

        merged = aggregate(
            [u.params for u in updates],
            reference,
            masks=[u.sent for u in updates] if plan is not None else None,
            fill=cfg.fill
        )
        state.global_model = unflatten(merged)
        state.next_round = t + 1

        metrics = RoundMetrics(
            round_index=t,
            grid=grid,
            bits_total=max(u.bits for u in updates),
            bits_budget=cfg.budget,
            rho=plan.ratio if plan is not None else 1.0,
            rmse=rmse(state.global_model, state.data.test_inputs, state.data.test_targets),
            train_loss=math.fsum(u.train_loss for u in updates) / len(updates),
            k=plan.retained_per_edge if plan is not None else None,
            sparsified=plan is not None,
            extended=extended,
            clients=clients,
            client_bits={u.client_id: u.bits for u in updates},
            layout_fingerprint=reference.layout.fingerprint()
        )
        if cfg.log_every and (t % cfg.log_every == 0 or t == cfg.rounds - 1):
            logger.info(
                "Round %d: grid=%d bits=%d rmse=%.6e train_loss=%.6e",
                t, grid, metrics.bits_total, metrics.rmse, metrics.train_loss
            )
        return metrics

    def run(self, sink: Optional[MetricsSink] = None) -> ExperimentResult:
        """Run rounds 0..T-1, passing every RoundMetrics to the sink as it completes."""
        cfg = self.config
        logger.info(
            "Starting federated run: N=%d T=%d clients/round=%d widths=%s g0=%d budget=%s",
            cfg.num_clients, cfg.rounds, cfg.clients_per_round,
            list(self.state.global_model.widths), self.state.schedule.g0, cfg.budget
        )
        history: List[RoundMetrics] = []
        for t in range(self.state.next_round, cfg.rounds):
            metrics = self.run_round(t)
            history.append(metrics)
            if sink is not None:
                sink(metrics)
        logger.info("Finished federated run: final rmse %.6e", history[-1].rmse if history else float("nan"))
        return ExperimentResult(metrics=history, final_model=self.state.global_model, seeds=dict(self.seeds))


def run_round(t: int, simulator: FederatedSimulator) -> Tuple[SimulationState, RoundMetrics]:
    """Run round t on a simulator; returns its updated state and the round record."""
    metrics = simulator.run_round(t)
    return simulator.state, metrics


def run_experiment(
    cfg: FLConfig,
    schedule: GridSchedule,
    data: SplitDataset,
    widths: Sequence[int],
    sink: Optional[MetricsSink] = None,
    initial_model: Optional[KanNetwork] = None
) -> ExperimentResult:
    """
    Initialise the global model and run every round.

    Args:
        cfg: Federation settings
        schedule: Grid schedule
        data: Partitioned dataset with its test set
        widths: Network widths
        sink: Optional per-round callback
        initial_model: Starting model; drawn from the init sub-seed when omitted

    Returns:
        ExperimentResult with the full metrics series and final model
    """
    simulator = FederatedSimulator(cfg, schedule, data, widths, initial_model)
    return simulator.run(sink)

