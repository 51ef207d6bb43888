import logging
import os

from dotenv import load_dotenv


load_dotenv()

LOG_LEVELS = {
    'off': logging.CRITICAL + 10,
    'info': logging.INFO,
    'trace': logging.DEBUG,
}


def log_level_from_env(default: str = 'info') -> int:
    """Map ENSIM_LOG (off|info|trace) to a logging level; unknown values fall back to the default."""
    name = os.environ.get('ENSIM_LOG', default).strip().lower()
    return LOG_LEVELS.get(name, LOG_LEVELS[default])


class Config:
    """Base configuration"""

    DEBUG = False
    TESTING = False

    # Logging
    LOG_LEVEL = log_level_from_env()
    LOG_DIR = os.environ.get('ENSIM_LOG_DIR') or None

    # Authority facade
    AUTHORITY_MAX_KEYS_PER_UPLOAD = int(os.environ.get('AUTHORITY_MAX_KEYS_PER_UPLOAD', 14))
    JSON_SORT_KEYS = True


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    LOG_LEVEL = logging.DEBUG


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    LOG_DIR = None


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': ProductionConfig
}
