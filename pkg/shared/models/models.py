"""
Database models for sweep results.

One SweepRecord per (resolution, method) row of a convergence sweep, so runs
can be compared over time without keeping every CSV file around.
"""

import logging
from datetime import datetime, timezone
from typing import List

from peewee import CharField, DateTimeField, DoubleField, IntegerField

from .database import BaseModel

logger = logging.getLogger(__name__)


def utcnow():
    return datetime.now(timezone.utc)


class SweepRecord(BaseModel):
    """One row of a sweep: resolution, method and the resulting errors."""
    run_id = CharField(max_length=64, index=True)
    sweep_kind = CharField(max_length=32, index=True)
    created_at = DateTimeField(default=utcnow, index=True)
    n_x = IntegerField()
    n_s = IntegerField()
    n_phi = IntegerField()
    method = CharField(max_length=8)
    global_rel_l2 = DoubleField(null=True)        # null = undefined (zero-norm truth)
    worst_angle_rel_l2 = DoubleField(null=True)
    worst_angle_deg = DoubleField(null=True)
    wall_time_s = DoubleField(null=True)

    class Meta:
        table_name = 'sweep_records'
        indexes = (
            (('run_id', 'n_x', 'n_s', 'n_phi', 'method'), True),
        )


def get_run(run_id: str) -> List[SweepRecord]:
    """All rows of one run, in insertion order."""
    return list(SweepRecord.select().where(SweepRecord.run_id == run_id).order_by(SweepRecord.id))
