# solvgeom/tasks.py

import logging

from celery import shared_task

from .exceptions import ConfigInvalid
from .serializers import CampaignConfigSerializer
from .services.campaign_service import CampaignService

logger = logging.getLogger('solvgeom')


def load_config(raw_config):
    """Validate a raw campaign config dict; ConfigInvalid carries the serializer errors."""
    serializer = CampaignConfigSerializer(data=raw_config)
    if not serializer.is_valid():
        raise ConfigInvalid('campaign configuration is invalid', errors=serializer.errors)
    return serializer.validated_data


@shared_task(name='solvgeom.run_campaign_shard')
def run_campaign_shard(subcommand, raw_config, shard=0, jobs=1):
    """
    Run one shard of a campaign.

    The raw (JSON) config travels with the task and is validated again on
    the worker, so a shard never depends on state of the dispatching process.

    Returns:
        the shard report as a dict, shards included
    """
    config = load_config(raw_config)
    logger.info(f'=== SHARD {shard}/{jobs} OF {subcommand} ===')
    report = CampaignService(config, shard=shard, jobs=jobs).run(subcommand)
    return report.as_dict(include_shards=True)
