"""Command-line interface: lift, match, merge, export, serve."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .advisor import Advisor
from .engine import DEFAULT_MERGED_NAME, MergeSession, NamePolicy
from .errors import OntomergeError
from .ingest import LiftConfig, infer_schema, lift as lift_documents, read_xsd
from .matching import MatchConfig, initial_matches, load_synonyms
from .operations import op_to_dict
from .owlio import read_owl_file, write_canonical, write_owl
from .scripts import load_script, replay


@click.group()
def main():
    """Ontology merge workbench."""


@main.command("lift")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--name", required=True, help="Name of the lifted ontology.")
@click.option("--xsd", type=click.Path(exists=True, path_type=Path),
              help="Restricted-profile XSD; bypasses schema inference.")
@click.option("--with-instances", is_flag=True, help="Also lift element instances.")
@click.option("--prefix", default="has", show_default=True,
              help="Object-property name prefix.")
@click.option("-o", "--output", required=True, type=click.Path(path_type=Path))
def lift_cmd(files, name, xsd, with_instances, prefix, output):
    """Lift XML FILES into a local ontology and write it as OWL."""
    documents = [f.read_text(encoding="utf-8") for f in files]
    try:
        if xsd:
            schema = read_xsd(xsd.read_text(encoding="utf-8"))
        else:
            schema = infer_schema(documents)
        onto = lift_documents(
            schema,
            documents,
            LiftConfig(object_property_prefix=prefix, with_instances=with_instances),
            name=name,
        )
    except OntomergeError as exc:
        raise click.ClickException(str(exc)) from exc
    output.write_text(write_owl(onto), encoding="utf-8")
    click.echo(
        f"{name}: {len(onto.classes)} classes, {len(onto.slots)} slots, "
        f"{len(onto.instances)} instances -> {output}"
    )


@main.command("match")
@click.argument("first", type=click.Path(exists=True, path_type=Path))
@click.argument("second", type=click.Path(exists=True, path_type=Path))
@click.option("--threshold", type=float, default=0.8, show_default=True)
@click.option("--ngram", type=int, default=3, show_default=True)
@click.option("--synonyms", type=click.Path(exists=True, path_type=Path))
def match_cmd(first, second, threshold, ngram, synonyms):
    """Print the initial merge suggestions between two OWL files."""
    o1, _ = read_owl_file(first)
    o2, _ = read_owl_file(second)
    config = MatchConfig(threshold=threshold, ngram_n=ngram)
    if synonyms:
        config.synonym_table = load_synonyms(synonyms)
    for suggestion in initial_matches(o1, o2, config):
        op = op_to_dict(suggestion.proposed)
        args = " ".join(v for k, v in op.items() if k != "type")
        click.echo(f"{suggestion.score:0.3f}  {op['type']}  {args}")
        for explanation in suggestion.explanations:
            click.echo(f"       {explanation.text}")


@main.command("merge")
@click.option("--script", "script_path", type=click.Path(exists=True, path_type=Path),
              help="Replay a merge script.")
@click.option("--auto", is_flag=True, help="Run the suggestion loop non-interactively.")
@click.option("--sources", "-s", multiple=True, type=click.Path(exists=True, path_type=Path),
              help="Source OWL files (auto mode).")
@click.option("--preferred", help="Source ontology that wins automatic conflict resolution.")
@click.option("--threshold", type=float)
@click.option("--suffix-policy", type=click.Choice([p.value for p in NamePolicy]))
@click.option("--merged-name", default=DEFAULT_MERGED_NAME, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["owl", "canonical"]), default="owl",
              show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path))
def merge_cmd(script_path, auto, sources, preferred, threshold, suffix_policy,
              merged_name, fmt, output):
    """Merge source ontologies by script or automatically."""
    if bool(script_path) == bool(auto):
        raise click.UsageError("use exactly one of --script or --auto")
    try:
        if script_path:
            script = load_script(script_path)
            if preferred:
                script.preferred = preferred
            if threshold is not None:
                script.threshold = threshold
            if suffix_policy:
                script.suffix_policy = NamePolicy(suffix_policy)
            advisor = replay(script, base_dir=script_path.parent)
        else:
            if len(sources) < 2:
                raise click.UsageError("auto mode needs at least two --sources")
            loaded = [read_owl_file(p)[0] for p in sources]
            session = MergeSession(
                loaded,
                merged_name=merged_name,
                preferred_source=preferred,
                policy=NamePolicy(suffix_policy) if suffix_policy else NamePolicy.SUFFIX_ON_COLLISION,
            )
            config = MatchConfig()
            if threshold is not None:
                config.threshold = threshold
            advisor = Advisor(session, config=config)
            report = advisor.auto_merge(strict=bool(preferred))
            click.echo(
                f"auto-merge: {report.applied} operations, "
                f"{len(report.unresolved)} unresolved conflicts", err=True
            )
    except OntomergeError as exc:
        raise click.ClickException(str(exc)) from exc
    merged = advisor.session.merged
    text = write_canonical(merged) if fmt == "canonical" else write_owl(merged)
    if output:
        output.write_text(text, encoding="utf-8")
        click.echo(f"merged ontology written to {output}", err=True)
    else:
        click.echo(text, nl=False)


@main.command("export")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--canonical", "fmt", flag_value="canonical", default=True)
@click.option("--owl", "fmt", flag_value="owl")
@click.option("-o", "--output", type=click.Path(path_type=Path))
def export_cmd(file, fmt, output):
    """Convert an OWL file to canonical text (or normalized OWL)."""
    try:
        onto, warnings = read_owl_file(file)
    except OntomergeError as exc:
        raise click.ClickException(str(exc)) from exc
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    text = write_canonical(onto) if fmt == "canonical" else write_owl(onto)
    if output:
        output.write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--state-dir", type=click.Path(path_type=Path), default=Path("ontomerge-sessions"),
              show_default=True)
@click.option("--ui-dir", type=click.Path(path_type=Path),
              help="Directory of built UI assets to serve at /ui.")
def serve_cmd(port, host, state_dir, ui_dir):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(state_dir, ui_dir=ui_dir), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
