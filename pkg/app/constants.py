"""Centralized constants used across the party affiliation toolkit."""

# Prediction sentinel for nodes no seed label reaches.
ABSTAIN = -1

# Namespaces for non-user targets so bipartite graphs never alias user ids.
TAG_NAMESPACE = "tag:"
TWEET_NAMESPACE = "tweet:"

# Versioned binary artifacts (graphs, embeddings, models), little-endian.
ARTIFACT_MAGIC = b"PAFT"
ARTIFACT_VERSION = 1

# Default configuration values, collected here to avoid scattering magic
# numbers through the pipelines.
DEFAULT_ACTIVE_FRACTION = 0.5
DEFAULT_LP_ITERATIONS = 2
DEFAULT_LP_ALPHA = 0.5
DEFAULT_HIDDEN_DIM = 100
DEFAULT_GCN_EPOCHS = 1000
DEFAULT_GCN_LR = 1e-3
DEFAULT_TEST_FRACTION = 0.4
DEFAULT_REPETITIONS = 10
DEFAULT_WINDOW_MINUTES = 15

# (items per request, requests per window) for each retrieval endpoint.
DEFAULT_RATE_LIMITS = {
    "tweets": (200, 900),
    "likes": (100, 75),
    "relations": (5000, 15),
}

# Profile keywords used for the first, weak labeling stage.
DEFAULT_US_KEYWORDS = {
    "D": ["liberal", "progressive", "democrat", "biden"],
    "R": ["conservative", "gop", "republican", "trump"],
}
