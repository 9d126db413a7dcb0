__all__ = ['config']
