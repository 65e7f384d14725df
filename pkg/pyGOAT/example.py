#!/usr/bin/env python3
"""
Example usage of the pyGOAT module interface

Renders a small synthetic dataset, trains briefly, evaluates the result
and runs inference on one validation pair.
"""

import pyGOAT
from pyGOAT.Stereo_Matching.dataset import sample_paths


def main():
    """Generate data, train for a few steps and evaluate."""

    print("pyGOAT Module Example")
    print("=" * 40)

    try:
        pyGOAT.generate_dataset("./goat_data", count=20, seed=0, split="train")
        pyGOAT.generate_dataset("./goat_data", count=4, seed=1, split="val")

        training = pyGOAT.train_goat(
            "./goat_data",
            "./goat_run",
            steps=50,
            overrides={"model": {"iterations": 4}},
            print_output=True
        )
        checkpoint = training.checkpoints[-1]
        print(f"\n✓ Training finished, final loss {training.losses[-1]:.4f}")
        print(f"  Checkpoint: {checkpoint}")

        evaluation = pyGOAT.evaluate_goat("./goat_data", "./goat_reports", checkpoint=checkpoint)
        epe_all = evaluation.aggregate.epe_all
        print(f"✓ Validation EPE (all pixels): "
              f"{'n/a' if epe_all is None else format(epe_all, '.3f')}")
        print(f"  Report CSV: {evaluation.csv_file}")

        paths = sample_paths("./goat_data", "val", evaluation.reports[0].sample_id)
        result = pyGOAT.estimate_disparity(checkpoint, paths['left'], paths['right'],
                                           output_dir="./goat_infer")
        print(f"✓ Disparity: {result.disparity_file}")
        print(f"  Occlusion: {result.occlusion_file}")
        print(f"  Visualization: {result.visualization_file}")

    except pyGOAT.PyGOATError as e:
        print(f"✗ Run failed: {e}")


if __name__ == "__main__":
    main()
