import abc
from typing import Dict

import pandas

from .lab import EstimatorReport, fit_scaling_exponent

# Estimates of one kernel keyed by graph size
SizeReports = Dict[int, EstimatorReport]


class BaseTearsheet:
    """Class to create a DataFrame summary of a sweep over kernels"""

    @abc.abstractmethod
    def create_panel(self, reports: SizeReports) -> pandas.Series:
        """Create a panel summarising one kernel from its reports

        Parameters
        ----------
        reports : SizeReports
            Estimator reports of a single kernel keyed by graph size

        Returns
        -------
        pandas.Series
            A pandas series with summary information of the kernel
        """
        raise NotImplementedError

    def create_tearsheet(
        self, sweep: Dict[str, SizeReports]
    ) -> pandas.DataFrame:
        """Create a tearsheet from the reports of every kernel

        Parameters
        ----------
        sweep : Dict[str, SizeReports]
            Reports keyed by kernel name, the key is used as the column name

        Returns
        -------
        pandas.DataFrame
            A DataFrame providing a tabular summary of the kernels
        """
        return pandas.DataFrame(
            {
                kernel: self.create_panel(reports)
                for kernel, reports in sweep.items()
            }
        )


class CoverTimeTearsheet(BaseTearsheet):
    """Mean cover time per size, one column per kernel"""

    def create_panel(self, reports: SizeReports) -> pandas.Series:
        return pandas.Series(
            {
                size: report.estimate
                for size, report in sorted(reports.items())
            },
            dtype="float64",
        )


class ScalingTearsheet(BaseTearsheet):
    """Fitted log-log exponent of the estimates against size"""

    def create_panel(self, reports: SizeReports) -> pandas.Series:
        sizes = sorted(reports)
        exponent, r_squared = fit_scaling_exponent(
            sizes, [reports[size].estimate for size in sizes]
        )
        return pandas.Series(
            {
                "Exponent": exponent,
                "R2": r_squared,
                "Censored": float(sum(r.censored for r in reports.values())),
            }
        )
