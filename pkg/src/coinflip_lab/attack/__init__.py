"""Adversaries that bias Boolean functions and multi-round protocols."""

from .greedy import greedy_to as greedy_to
from .greedy import kkl_greedy as kkl_greedy
from .params import AttackMode as AttackMode
from .params import AttackParams as AttackParams
from .params import lemma_steps as lemma_steps
from .params import theorem_bound as theorem_bound
from .process import family_common_set as family_common_set
from .process import select_common_set as select_common_set
from .process import semi_random_process as semi_random_process
from .protocol_bias import HeavySetMap as HeavySetMap
from .protocol_bias import bias_protocol as bias_protocol
from .protocol_bias import bias_protocol_multibit as bias_protocol_multibit
from .protocol_bias import round_lb_probe as round_lb_probe
