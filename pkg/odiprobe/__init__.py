__version__ = '0.1.0'
__all__ = ['corpus', 'terms', 'probes', 'backends', 'evaluator', 'trainer', 'store', 'config', 'cli']
