"""
Services package initialization
"""
from .experiment_service import ExperimentService
from .export_service import ExportService

__all__ = ['ExperimentService', 'ExportService']
