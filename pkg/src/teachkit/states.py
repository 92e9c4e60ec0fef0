"""User-defined state sets, counters, staggered parameters, and
trigger-action bindings.

A state belongs to exactly one StateSet. Discrete sets treat states as
independent; continuous sets declare an ordered sequence mapped onto an
evenly spaced parameter range (6 states over [0, 1] give
0.0, 0.2, 0.4, 0.6, 0.8, 1.0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import StateClass, StateEvent
from .errors import NotContinuous, TeachkitError, UnknownState, ValidationError

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass
class StateSet:
    set_id: str
    kind: str = DISCRETE
    states: list[StateClass] = field(default_factory=list)
    param_start: float = 0.0
    param_end: float = 1.0

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise TeachkitError(f"unknown state set kind {self.kind!r}")

    def add_state(self, state_id: str, name: str | None = None) -> StateClass:
        if any(s.state_id == state_id for s in self.states):
            raise TeachkitError(f"duplicate state id {state_id!r}")
        cls = StateClass(state_id=state_id, name=name or state_id,
                         ordinal=len(self.states))
        self.states.append(cls)
        return cls

    def state_for(self, state_id: str) -> StateClass:
        for s in self.states:
            if s.state_id == state_id:
                return s
        raise UnknownState(state_id)


def staggered_param(state_set: StateSet, state_id: str) -> float:
    """Evenly spaced parameter value for a state in a continuous set."""
    if state_set.kind != CONTINUOUS:
        raise NotContinuous(f"state set {state_set.set_id!r} is not continuous")
    cls = state_set.state_for(state_id)
    k = len(state_set.states)
    if k < 2:
        raise TeachkitError("continuous sets need at least 2 states")
    if cls.ordinal == 0:  # endpoints exact regardless of rounding
        return state_set.param_start
    if cls.ordinal == k - 1:
        return state_set.param_end
    span = state_set.param_end - state_set.param_start
    return state_set.param_start + cls.ordinal * span / (k - 1)


# -- actions -----------------------------------------------------------------

@dataclass(frozen=True)
class ApplyKeyedScene:
    state_id: str


@dataclass(frozen=True)
class PlayAudio:
    asset_id: str


@dataclass(frozen=True)
class SetParameterTarget:
    value: float


@dataclass(frozen=True)
class RunBehavior:
    behavior_id: str
    on: bool


Action = ApplyKeyedScene | PlayAudio | SetParameterTarget | RunBehavior


# -- triggers ----------------------------------------------------------------

@dataclass(frozen=True)
class EnterTrigger:
    state_id: str


@dataclass(frozen=True)
class TransitionTrigger:
    from_id: str
    to_id: str


Trigger = EnterTrigger | TransitionTrigger


@dataclass
class TriggerBinding:
    trigger: Trigger
    actions: list[Action]


def binding_problems(binding: TriggerBinding, state_ids, asset_ids=None,
                     behavior_ids=None) -> list[str]:
    """Broken references in one binding (empty when valid). asset_ids or
    behavior_ids of None skips that table's check."""
    problems = []
    trig = binding.trigger
    refs = [trig.state_id] if isinstance(trig, EnterTrigger) else [trig.from_id, trig.to_id]
    for sid in refs:
        if sid not in state_ids:
            problems.append(f"binding trigger references unknown state {sid!r}")
    for action in binding.actions:
        if isinstance(action, ApplyKeyedScene) and action.state_id not in state_ids:
            problems.append(f"binding action references unknown state {action.state_id!r}")
        elif isinstance(action, PlayAudio) and asset_ids is not None \
                and action.asset_id not in asset_ids:
            problems.append(f"binding action references unknown asset {action.asset_id!r}")
        elif isinstance(action, RunBehavior) and behavior_ids is not None \
                and action.behavior_id not in behavior_ids:
            problems.append(
                f"binding action references unknown behavior {action.behavior_id!r}"
            )
    return problems


class StateRuntime:
    """Counters plus trigger evaluation over the stable-state event stream.

    Runs on a single event loop: callers feed events strictly in timestamp
    order and execute the returned actions themselves.
    """

    def __init__(self, state_sets: list[StateSet],
                 bindings: list[TriggerBinding] | None = None):
        self.state_sets = list(state_sets)
        self.bindings: list[TriggerBinding] = []
        self.counters: dict[str, int] = {}
        for sset in self.state_sets:
            for cls in sset.states:
                self.counters[cls.state_id] = 0
        for binding in bindings or []:
            self.add_binding(binding)

    def state_ids(self) -> list[str]:
        return [c.state_id for s in self.state_sets for c in s.states]

    def set_for(self, state_id: str) -> StateSet | None:
        for sset in self.state_sets:
            if any(c.state_id == state_id for c in sset.states):
                return sset
        return None

    def add_binding(self, binding: TriggerBinding, asset_ids=None,
                    behavior_ids=None):
        """Validates references at bind time. Pass asset/behavior id tables to
        enforce those checks; None skips them (caller owns those tables)."""
        problems = binding_problems(
            binding,
            set(self.state_ids()),
            set(asset_ids) if asset_ids is not None else None,
            set(behavior_ids) if behavior_ids is not None else None,
        )
        if problems:
            raise ValidationError(problems)
        self.bindings.append(binding)

    def counter(self, state_id: str) -> int:
        if state_id not in self.counters:
            raise UnknownState(state_id)
        return self.counters[state_id]

    def reset_counters(self):
        for key in self.counters:
            self.counters[key] = 0

    def on_state_event(self, event: StateEvent) -> list[Action]:
        """Count the entry, then collect actions: the implicit parameter
        update for continuous sets first, then matching bindings in
        declaration order."""
        self.counters[event.state_id] = self.counters.get(event.state_id, 0) + 1
        actions: list[Action] = []
        sset = self.set_for(event.state_id)
        if sset is not None and sset.kind == CONTINUOUS:
            actions.append(SetParameterTarget(staggered_param(sset, event.state_id)))
        for binding in self.bindings:
            if self._matches(binding.trigger, event):
                actions.extend(binding.actions)
        return actions

    @staticmethod
    def _matches(trigger: Trigger, event: StateEvent) -> bool:
        if isinstance(trigger, EnterTrigger):
            return trigger.state_id == event.state_id
        return (
            event.from_state_id is not None
            and trigger.from_id == event.from_state_id
            and trigger.to_id == event.state_id
        )
