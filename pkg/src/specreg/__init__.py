__version__ = '0.1.0'


from specreg.estimators import Dataset, fit, primal_fit
from specreg.kernels import Kernel
from specreg.spectral import FilterSpec
