from .campaign import (
    TASK_PROMPTS,
    Campaign,
    SystemSpec,
    Trial,
    aggregate,
    aggregate_csv,
    blinded_stimuli,
    build_campaign,
    load_campaign_manifest,
    opaque_key,
    reference_key,
    stimulus_order,
)
from .server import create_app
from .store import RatingStore

__all__ = [
    "TASK_PROMPTS",
    "Campaign",
    "SystemSpec",
    "Trial",
    "aggregate",
    "aggregate_csv",
    "blinded_stimuli",
    "build_campaign",
    "load_campaign_manifest",
    "opaque_key",
    "reference_key",
    "stimulus_order",
    "create_app",
    "RatingStore",
]
