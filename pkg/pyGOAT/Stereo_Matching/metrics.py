"""
Disparity and occlusion metrics over All / Occluded / Non-occluded pixels.

A metric over an empty region is None, never 0.
"""
import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from pyGOAT.exceptions import ConfigError, MissingGroundTruthError, ShapeMismatchError
from pyGOAT.Stereo_Matching.constants import (D1_ABS_THRESHOLD, D1_REL_THRESHOLD,
                                              OCCLUSION_THRESHOLD)
from pyGOAT.Stereo_Matching.occlusion_gt import lr_consistency
from pyGOAT.Stereo_Matching.stereo_sample import valid_mask

CSV_FIELDS = ('sample_id', 'epe_all', 'epe_occ', 'epe_noc', 'p1', 'p3', 'd1', 'occ_miou',
              'count_all', 'count_occ', 'count_noc')


def _errors(pred, gt, region_mask):
    pred = np.asarray(getattr(pred, 'data', pred), dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError('metric', [pred.shape, gt.shape])
    region = valid_mask(gt)
    if region_mask is not None:
        region &= np.asarray(region_mask, dtype=bool)
    if not region.any():
        return None, None
    return np.abs(pred[region] - gt[region]), gt[region]


def epe(pred, gt, region_mask=None):
    """Mean absolute disparity error over `region_mask` and valid GT."""
    errors, _ = _errors(pred, gt, region_mask)
    return None if errors is None else float(errors.mean())


def outlier_rate(pred, gt, k, region_mask=None):
    """Fraction of region pixels whose error exceeds `k` pixels."""
    if k <= 0:
        raise ConfigError(f"outlier threshold must be positive, got {k}")
    errors, _ = _errors(pred, gt, region_mask)
    return None if errors is None else float(np.mean(errors > k))


def d1_rate(pred, gt, region_mask=None):
    """Fraction with error > 3 px and > 5% of the ground truth."""
    errors, truth = _errors(pred, gt, region_mask)
    if errors is None:
        return None
    outliers = (errors > D1_ABS_THRESHOLD) & (errors > D1_REL_THRESHOLD * np.abs(truth))
    return float(outliers.mean())


def occ_miou(pred_occ, gt_occ, threshold=OCCLUSION_THRESHOLD):
    """
    Mean of the occluded and non-occluded IoU of the binarised prediction.

    A class absent from both prediction and ground truth scores 1.
    """
    pred = np.asarray(getattr(pred_occ, 'data', pred_occ)) >= threshold
    gt = np.asarray(gt_occ).astype(bool)
    if pred.shape != gt.shape:
        raise ShapeMismatchError('occ_miou', [pred.shape, gt.shape])
    ious = []
    for p, g in ((pred, gt), (~pred, ~gt)):
        union = np.count_nonzero(p | g)
        ious.append(1.0 if union == 0 else np.count_nonzero(p & g) / union)
    return float(np.mean(ious))


@dataclass
class RegionReport:
    sample_id: str
    epe_all: Optional[float]
    epe_occ: Optional[float]
    epe_noc: Optional[float]
    p1: Optional[float]
    p3: Optional[float]
    d1: Optional[float]
    occ_miou: Optional[float]
    count_all: int
    count_occ: int
    count_noc: int

    @property
    def pk_rates(self):
        return {1: self.p1, 3: self.p3}

    def to_dict(self):
        return {
            'sample_id': self.sample_id,
            'epe': {'all': self.epe_all, 'occ': self.epe_occ, 'noc': self.epe_noc},
            'p1': self.p1, 'p3': self.p3, 'd1': self.d1, 'occ_miou': self.occ_miou,
            'counts': {'all': self.count_all, 'occ': self.count_occ, 'noc': self.count_noc},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(sample_id=data['sample_id'],
                   epe_all=data['epe']['all'], epe_occ=data['epe']['occ'],
                   epe_noc=data['epe']['noc'], p1=data['p1'], p3=data['p3'], d1=data['d1'],
                   occ_miou=data['occ_miou'], count_all=data['counts']['all'],
                   count_occ=data['counts']['occ'], count_noc=data['counts']['noc'])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def csv_row(self):
        return ['' if value is None else value for value in asdict(self).values()]

    @classmethod
    def empty(cls, sample_id):
        return cls(sample_id, None, None, None, None, None, None, None, 0, 0, 0)


def region_report(pred_disp, pred_occ, sample, sample_id=None):
    """
    All metrics of one prediction against a sample's ground truth.

    When the sample carries no occlusion mask it is derived from both GT
    disparities with the left-right consistency check.

    Raises
    ------
    MissingGroundTruthError
        No left disparity, or no way to obtain the occlusion mask.
    """
    sample_id = sample_id if sample_id is not None else sample.sample_id
    if sample.gt_disp_left is None:
        raise MissingGroundTruthError(sample_id, "left ground-truth disparity")
    gt = sample.gt_disp_left
    if sample.gt_occlusion is not None:
        occluded = sample.gt_occlusion.astype(bool)
    elif sample.gt_disp_right is not None:
        occluded = lr_consistency(gt, sample.gt_disp_right).astype(bool)
    else:
        raise MissingGroundTruthError(sample_id, "occlusion mask or right disparity")

    valid = valid_mask(gt)
    return RegionReport(
        sample_id=sample_id,
        epe_all=epe(pred_disp, gt),
        epe_occ=epe(pred_disp, gt, occluded),
        epe_noc=epe(pred_disp, gt, ~occluded),
        p1=outlier_rate(pred_disp, gt, 1),
        p3=outlier_rate(pred_disp, gt, 3),
        d1=d1_rate(pred_disp, gt),
        occ_miou=None if pred_occ is None else occ_miou(pred_occ, occluded),
        count_all=int(valid.sum()),
        count_occ=int((valid & occluded).sum()),
        count_noc=int((valid & ~occluded).sum()))


def _weighted(reports, field, count_field):
    pairs = [(getattr(r, field), getattr(r, count_field)) for r in reports
             if getattr(r, field) is not None and getattr(r, count_field) > 0]
    total = sum(count for _, count in pairs)
    if total == 0:
        return None
    return float(sum(value * count for value, count in pairs) / total)


def aggregate_reports(reports, sample_id='aggregate'):
    """Merge per-sample reports, weighting every metric by its region's pixel count."""
    reports = list(reports)
    return RegionReport(
        sample_id=sample_id,
        epe_all=_weighted(reports, 'epe_all', 'count_all'),
        epe_occ=_weighted(reports, 'epe_occ', 'count_occ'),
        epe_noc=_weighted(reports, 'epe_noc', 'count_noc'),
        p1=_weighted(reports, 'p1', 'count_all'),
        p3=_weighted(reports, 'p3', 'count_all'),
        d1=_weighted(reports, 'd1', 'count_all'),
        occ_miou=_weighted(reports, 'occ_miou', 'count_all'),
        count_all=sum(r.count_all for r in reports),
        count_occ=sum(r.count_occ for r in reports),
        count_noc=sum(r.count_noc for r in reports))


def write_reports_csv(path, reports):
    with Path(path).open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for report in reports:
            writer.writerow(report.csv_row())
    return Path(path)
