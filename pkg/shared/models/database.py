"""Sweep result database using Peewee ORM (SQLite by default, any playhouse URL works)"""
import logging

from peewee import DatabaseProxy, Model
from playhouse.db_url import connect

logger = logging.getLogger(__name__)

# Bound at runtime by initialize_database(url)
database = DatabaseProxy()


class BaseModel(Model):
    """Base model for all database models"""
    class Meta:
        database = database


def close_database():
    """Close database connection"""
    if database.obj is not None and not database.is_closed():
        database.close()
        logger.info("Database connection closed")


def initialize_database(url: str):
    """Connect to url and create all tables if they don't exist"""
    from .models import SweepRecord

    logger.info(f"Initializing sweep database at {url}")
    db = connect(url)
    database.initialize(db)
    db.connect(reuse_if_open=True)
    db.create_tables([SweepRecord], safe=True)
    logger.info("Database tables created successfully")
    return db
