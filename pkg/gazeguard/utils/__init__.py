"""
Utils package initialization
"""
from .validation import ConfigurationError, EmptyInputError, ValidationError, Validator

__all__ = ['ConfigurationError', 'EmptyInputError', 'ValidationError', 'Validator']
