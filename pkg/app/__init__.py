import logging
from logging.handlers import RotatingFileHandler
import os
import sys
from flask import Flask
from config import Config

# counts are printed in full, however many digits they have
if hasattr(sys, 'set_int_max_str_digits'):
    sys.set_int_max_str_digits(0)

__version__ = '0.1.0'

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'


class StderrHandler(logging.StreamHandler):
    """Writes to whatever sys.stderr is when a record is emitted."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def file_handler(log_dir: str = 'logs') -> RotatingFileHandler:
    if not os.path.exists(log_dir):
        os.mkdir(log_dir)
    handler = RotatingFileHandler(os.path.join(log_dir, 'interleave.log'),
                                  maxBytes=10240, backupCount=10)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(logging.INFO)
    return handler


def configure_logging(level: str = Config.LOG_LEVEL, to_file: bool = False,
                      log_dir: str = Config.LOG_DIR) -> logging.Logger:
    """Send the `app` logger to stderr, and to the rotating log on request."""
    logger = logging.getLogger('app')
    logger.setLevel(level.upper())
    if not any(getattr(h, 'interleave_cli', False) for h in logger.handlers):
        stream = StderrHandler()
        stream.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        stream.interleave_cli = True  # type: ignore[attr-defined]
        logger.addHandler(stream)
        if to_file:
            logger.addHandler(file_handler(log_dir))
    return logger


def create_app(config_class=Config):
    app = Flask(__name__)
    app.config.from_object(config_class)

    from app.errors import bp as errors_bp
    app.register_blueprint(errors_bp)

    from app.api import bp as api_bp
    app.register_blueprint(api_bp, url_prefix='/api')

    if not app.debug and not app.testing:
        app.logger.addHandler(file_handler(app.config['LOG_DIR']))
        app.logger.setLevel(logging.INFO)
        app.logger.info('Interleave startup')

    return app


from app import models
