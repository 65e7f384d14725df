"""
Command-line interface for pyGOAT.

    goat gen-data --out data --count 200 --seed 0
    goat train --data data --out runs/smoke --steps 500
    goat eval --ckpt runs/smoke/model.goat --data data --report reports
    goat infer --ckpt runs/smoke/model.goat --left l.ppm --right r.ppm --out out
    goat occ-gt --dispL l.pfm --dispR r.pfm --out occ.pgm

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.
"""
import functools
import logging
import sys

import click

from pyGOAT import pygoat
from pyGOAT.exceptions import PyGOATError
from pyGOAT.Stereo_Matching.constants import LR_CONSISTENCY_THRESHOLD
from pyGOAT.Stereo_Matching.synth_scene import TEXTURE_KINDS

logger = logging.getLogger(__name__)

EXISTING_FILE = click.Path(exists=True, dir_okay=False)


def _report_errors(command):
    """Turn PyGOATError into a message on stderr and the error's exit code."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PyGOATError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def _parse_size(ctx, param, value):
    try:
        height, width = (int(part) for part in value.lower().split('x'))
    except ValueError:
        raise click.BadParameter(f"expected HEIGHTxWIDTH such as 64x128, got '{value}'")
    return height, width


@click.group()
@click.option('-v', '--verbose', is_flag=True, help='Log debug messages.')
def cli(verbose):
    """Occlusion-aware stereo matching: data, training, evaluation and inference."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


@cli.command('gen-data')
@click.option('--out', required=True, type=click.Path(file_okay=False),
              help='Dataset root directory.')
@click.option('--count', default=200, show_default=True, type=click.IntRange(min=0),
              help='Number of samples.')
@click.option('--seed', default=0, show_default=True, help='Master seed.')
@click.option('--split', default='train', show_default=True, help='Split sub-directory.')
@click.option('--size', default='64x128', show_default=True, callback=_parse_size,
              help='Image size as HEIGHTxWIDTH.')
@click.option('--layers', default=3, show_default=True, help='Layers including the background.')
@click.option('--dmax', default=24.0, show_default=True,
              help='Maximum disparity, below a quarter of the width.')
@click.option('--texture', default='noise', show_default=True,
              type=click.Choice(TEXTURE_KINDS), help='Layer texture.')
@click.option('--subpixel', is_flag=True, help='Allow non-integer layer disparities.')
@click.option('--threads', type=int, default=None, help='Worker threads (default GOAT_THREADS).')
@click.option('--quiet', is_flag=True, help='Hide the progress bar.')
@_report_errors
def gen_data(out, count, seed, split, size, layers, dmax, texture, subpixel, threads, quiet):
    """Render a synthetic stereo dataset with dense ground truth."""
    height, width = size
    result = pygoat.generate_dataset(
        out, count, seed=seed, split=split, height=height, width=width, num_layers=layers,
        d_max=dmax, texture=texture, integer_disparity=not subpixel, threads=threads,
        print_output=not quiet)
    click.echo(f"Wrote {len(result.sample_ids)} samples to {result.split_dir}")


@cli.command()
@click.option('--config', 'config_file', type=EXISTING_FILE, help='INI configuration file.')
@click.option('--data', required=True, type=click.Path(exists=True, file_okay=False),
              help='Dataset root.')
@click.option('--steps', type=click.IntRange(min=0), default=None,
              help='Training steps (overrides [run] steps).')
@click.option('--seed', type=int, default=None, help='Run seed (overrides [run] seed).')
@click.option('--iterations', type=click.IntRange(min=1), default=None,
              help='Refinement iterations (overrides [model] iterations).')
@click.option('--lr', type=float, default=None, help='Learning rate (overrides [optimizer] lr).')
@click.option('--out', required=True, type=click.Path(file_okay=False),
              help='Directory for checkpoints, loss log and effective config.')
@click.option('--no-plot', is_flag=True, help='Skip the loss-curve figure.')
@click.option('--quiet', is_flag=True, help='Hide the progress bar.')
@_report_errors
def train(config_file, data, steps, seed, iterations, lr, out, no_plot, quiet):
    """Train a model on the training split."""
    overrides = {'model': {'iterations': iterations}, 'optimizer': {'lr': lr}}
    result = pygoat.train_goat(data, out, config_file=config_file, steps=steps, seed=seed,
                               overrides=overrides, print_output=not quiet, plot=not no_plot)
    if result.losses:
        click.echo(f"Final loss {result.losses[-1]:.5f} after {len(result.losses)} steps")
    click.echo(f"Checkpoint: {result.checkpoints[-1]}")


@cli.command('eval')
@click.option('--ckpt', type=EXISTING_FILE, help='Model checkpoint (.goat).')
@click.option('--data', required=True, type=click.Path(exists=True, file_okay=False),
              help='Dataset root.')
@click.option('--report', required=True, type=click.Path(file_okay=False),
              help='Directory for the JSON and CSV reports.')
@click.option('--split', default='val', show_default=True, help='Split to evaluate.')
@click.option('--oracle', is_flag=True,
              help='Score the ground truth itself instead of a model.')
@click.option('--threads', type=int, default=None, help='Worker threads (default GOAT_THREADS).')
@click.option('--quiet', is_flag=True, help='Hide the progress bar.')
@_report_errors
def evaluate(ckpt, data, report, split, oracle, threads, quiet):
    """Score a checkpoint on a dataset split."""
    result = pygoat.evaluate_goat(data, report, checkpoint=ckpt, split=split, oracle=oracle,
                                  threads=threads, print_output=not quiet)
    aggregate = result.aggregate
    for name in ('epe_all', 'epe_occ', 'epe_noc', 'p1', 'p3', 'd1', 'occ_miou'):
        value = getattr(aggregate, name)
        click.echo(f"{name:>9}: {'n/a' if value is None else format(value, '.4f')}")
    click.echo(f"Reports written to {result.report_dir}")


@cli.command()
@click.option('--ckpt', required=True, type=EXISTING_FILE, help='Model checkpoint (.goat).')
@click.option('--left', required=True, type=EXISTING_FILE, help='Left image (PPM).')
@click.option('--right', required=True, type=EXISTING_FILE, help='Right image (PPM).')
@click.option('--out', default='.', show_default=True, type=click.Path(file_okay=False),
              help='Output directory.')
@click.option('--name', default='disparity', show_default=True, help='Output file stem.')
@_report_errors
def infer(ckpt, left, right, out, name):
    """Estimate disparity and occlusion for one image pair."""
    result = pygoat.estimate_disparity(ckpt, left, right, out, name=name)
    for path in (result.disparity_file, result.occlusion_file, result.visualization_file):
        click.echo(str(path))


@cli.command('occ-gt')
@click.option('--dispL', 'disp_left', type=EXISTING_FILE, help='Left disparity (PFM).')
@click.option('--dispR', 'disp_right', type=EXISTING_FILE, help='Right disparity (PFM).')
@click.option('--ckpt', type=EXISTING_FILE, help='Checkpoint for flipped inference.')
@click.option('--left', type=EXISTING_FILE, help='Left image (PPM) for flipped inference.')
@click.option('--right', type=EXISTING_FILE, help='Right image (PPM) for flipped inference.')
@click.option('--out', required=True, type=click.Path(dir_okay=False),
              help='Output occlusion mask (PGM).')
@click.option('--threshold', default=LR_CONSISTENCY_THRESHOLD, show_default=True,
              help='Consistency threshold in pixels.')
@_report_errors
def occ_gt(disp_left, disp_right, ckpt, left, right, out, threshold):
    """
    Derive an occlusion mask, either from both disparity maps (--dispL --dispR)
    or by flipped inference with a checkpoint (--ckpt --left --right).
    """
    path = pygoat.generate_occlusion_gt(out, disp_left=disp_left, disp_right=disp_right,
                                        checkpoint=ckpt, left_image=left, right_image=right,
                                        threshold=threshold)
    click.echo(str(path))


def main():
    cli(prog_name='goat')


if __name__ == '__main__':
    main()
