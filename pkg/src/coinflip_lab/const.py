DOMAIN = "coinflip-lab"

# Truth tables are capped so every exact oracle stays in memory (2^24 bits at the limit).
MAX_ARITY = 24

# Total transcript bits (sum of players * bits per round) for exact backward induction.
EXACT_BUDGET = 22

# Largest number of coalitions resilience_check will enumerate.
MAX_COALITIONS = 20_000

DEFAULT_CONFIDENCE = 1 - 1e-6
DEFAULT_SEED = 0

# Constant C of the coalition-size theorems; used only for budget accounting.
THEOREM_CONSTANT = 10**7

# Chisel loop defaults (boost target of every recursive call, split retries).
DEFAULT_BOOST = "3/4"
MAX_SPLIT_RETRIES = 16

THREADS_ENV_VAR = "COINFLIP_LAB_THREADS"
