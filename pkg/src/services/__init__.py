"""Services module for the group calculus, curve surgery and shortening."""

from src.services.identity_suite_service import IdentitySuiteService
from src.services.shorten_service import ShortenService

__all__ = ["IdentitySuiteService", "ShortenService"]
