"""Fully dynamic decision trees with worst-case bounded work per update."""

from .core import (Example, ExampleMultiset, LabelStats, Op, UpdateRequest, active_set,
                   apply_update, delete, edit_distance, ins, make_example,
                   relative_edit_distance)
from .delayed import DelayApx, RoundSchedule, StepOutcome, TauModel
from .gains import GINI, INFO, VARIANCE, GainKind, conditional_gain, entropy, gini_impurity, label_variance
from .maintainer import Maintainer
from .opcount import OpCounter
from .rules import Leaf, Split, ThresholdRule, evaluate
from .splits import EQ, LT, SplitRule, best_split, best_split_for_feature
from .tree import DecisionTree, greedy_build

__version__ = "0.1.0"
