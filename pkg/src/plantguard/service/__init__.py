from plantguard.service.app import app_from_config, create_app
from plantguard.service.session import EventBuffer, ReplaySession, SessionError

__all__ = ["create_app", "app_from_config", "ReplaySession", "EventBuffer", "SessionError"]
