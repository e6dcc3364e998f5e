import os

from hypothesis import settings

from introimmune.manifest import parse_manifest

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def substrate(**sections):
    """Build a substrate from manifest-style section dicts."""
    return parse_manifest(sections).substrate
