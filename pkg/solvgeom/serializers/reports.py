from rest_framework import serializers

from solvgeom.models import CampaignReport, CheckStat


class CheckStatSerializer(serializers.Serializer):
    """Shape of one check record in a report file."""

    name = serializers.CharField()
    count = serializers.IntegerField(min_value=0)
    failures = serializers.IntegerField(min_value=0)
    minimum = serializers.FloatField(allow_null=True, required=False)
    maximum = serializers.FloatField(allow_null=True, required=False)
    bound = serializers.FloatField(allow_null=True, required=False)
    bound_kind = serializers.ChoiceField(choices=['max', 'min', 'info'], default='info')
    witnesses = serializers.ListField(child=serializers.JSONField(), default=list)
    passed = serializers.BooleanField(read_only=True)

    def create(self, validated_data):
        return CheckStat(**validated_data)


class CampaignReportSerializer(serializers.Serializer):
    """Header plus checks of a campaign report, as written by the report service."""

    subcommand = serializers.CharField()
    config_hash = serializers.CharField()
    seed = serializers.IntegerField(min_value=0)
    shards = serializers.ListField(child=serializers.CharField(), default=list)
    checks = CheckStatSerializer(many=True, default=list)
    passed = serializers.BooleanField(read_only=True)

    def create(self, validated_data):
        report = CampaignReport(
            subcommand=validated_data['subcommand'],
            config_hash=validated_data['config_hash'],
            seed=validated_data['seed'],
            shards=frozenset(validated_data.get('shards', [])),
        )
        for item in validated_data.get('checks', []):
            report.add(CheckStat(**item))
        return report
