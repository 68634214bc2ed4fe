"""Base estimator adapted from scikit-learn."""

from inspect import signature

from .exceptions import NotFittedError


class BaseEstimator(object):
    """Base class for the model-fitting objects of pybellaudit.

    Notes
    -----
    All estimators should specify all the parameters that can be set
    at the class level in their ``__init__`` as explicit keyword
    arguments (no ``*args`` or ``**kwargs``).
    """

    @classmethod
    def _get_param_names(cls):
        """Get parameter names for the estimator."""
        init = cls.__init__
        if init is object.__init__:
            # No explicit constructor to introspect
            return []

        parameters = [p for p in signature(init).parameters.values()
                      if p.name != 'self' and p.kind != p.VAR_KEYWORD]
        for p in parameters:
            if p.kind == p.VAR_POSITIONAL:
                raise RuntimeError("pybellaudit estimators should always "
                                   "specify their parameters in the signature"
                                   " of their __init__ (no varargs)."
                                   " %s doesn't follow this convention."
                                   % (cls,))
        return sorted([p.name for p in parameters])

    def get_params(self):
        """Get parameters for this estimator.

        Returns
        -------
        params : mapping of string to any
            Parameter names mapped to their values.
        """
        return dict((key, getattr(self, key, None))
                    for key in self._get_param_names())

    def set_params(self, **params):
        """Set the parameters of this estimator.

        Returns
        -------
        self
        """
        valid_params = self.get_params()
        for key, value in params.items():
            if key not in valid_params:
                raise ValueError('Invalid parameter %s for estimator %s. '
                                 'Check the list of available parameters '
                                 'with `estimator.get_params().keys()`.' %
                                 (key, self.__class__.__name__))
            setattr(self, key, value)
        return self

    def __repr__(self):
        """repr."""
        class_name = self.__class__.__name__
        params = ', '.join('%s=%r' % item
                           for item in sorted(self.get_params().items()))
        return '%s(%s)' % (class_name, params)


def check_is_fitted(estimator, attributes):
    """Raise NotFittedError unless all ``attributes`` are set.

    Parameters
    ----------
    estimator : BaseEstimator
        The estimator to check.
    attributes : list of str
        Attribute names set by ``fit``.
    """
    if not all(getattr(estimator, attr, None) is not None
               for attr in attributes):
        raise NotFittedError("This %s instance is not fitted yet. Call 'fit' "
                             "with appropriate arguments before using this "
                             "estimator." % type(estimator).__name__)
