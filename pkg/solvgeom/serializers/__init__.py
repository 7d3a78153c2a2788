# Serializers package
from .campaign_config import CampaignConfigSerializer
from .reports import CampaignReportSerializer, CheckStatSerializer

__all__ = [
    'CampaignConfigSerializer',
    'CampaignReportSerializer',
    'CheckStatSerializer',
]
