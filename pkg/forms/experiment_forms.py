"""This is the file where the forms for the experiment spec file are defined, one form per section, together with the functions
that parse a spec file into an ExperimentSpec and render an ExperimentSpec back into a spec file.

A spec file is INI text with the sections [market], [ts], [passive] and [experiment]. Every key is optional and falls back to
the default of the matching model. Unknown sections and keys are errors, and every problem found is reported with its line."""

import configparser
import math
import re

from werkzeug.datastructures import MultiDict
from wtforms import FloatField, Form, IntegerField, StringField
from wtforms.validators import AnyOf, NumberRange, Optional, StopValidation, ValidationError

from models.errors import FieldProblem, InvalidInputError, SpecError
from models.experiment import ESTIMATORS, ExperimentSpec, PassiveConfig
from models.market import POLICIES, MarketConfig
from models.posterior import AUTO, DIAGONAL, FULL, TSConfig

AUTO_NOISE = "auto"


def _parsed(form, field):
    # A value that did not convert already carries its error; don't pile range errors on top.
    if field.process_errors:
        raise StopValidation()


def _finite(form, field):
    if field.data is not None and not math.isfinite(field.data):
        raise ValidationError("must be a finite number")


def _negative(form, field):
    if field.data is not None and not field.data < 0:
        raise ValidationError("elasticity must be < 0")


def _positive(form, field):
    if field.data is not None and not field.data > 0:
        raise ValidationError("must be > 0")


def _open_unit(form, field):
    if field.data is not None and not 0 < field.data < 1:
        raise ValidationError("must lie strictly between 0 and 1")


def _number(*validators):
    return [Optional(), _parsed, _finite, *validators]


def _split(text):
    return [piece.strip() for piece in text.split(",") if piece.strip()]


def parse_prior_mean(text):
    """A single number, or a comma separated list of numbers (one per item). A trailing comma makes a one-item list."""

    values = [float(piece) for piece in _split(text)]
    if not values or not all(math.isfinite(value) for value in values):
        raise ValueError("prior_mean must be finite numbers")
    return tuple(values) if "," in text else values[0]


def parse_noise_var(text):
    if text.strip().lower() == AUTO_NOISE:
        return None
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise ValueError("noise_var must be a positive number or auto")
    return value


def parse_policies(text):
    policies = tuple(piece.lower() for piece in _split(text))
    if not policies or len(set(policies)) != len(policies) or not set(policies) <= set(POLICIES):
        raise ValueError(f"policies must be distinct names from {', '.join(POLICIES)}")
    return policies


def parse_ks(text):
    ks = tuple(int(piece) for piece in _split(text))
    if not ks or any(k < 1 for k in ks) or list(ks) != sorted(set(ks)):
        raise ValueError("report_ks must be positive and strictly ascending")
    return ks


def _parses_with(parser):
    def validator(form, field):
        try:
            parser(field.data)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    return validator


def _require_order(form, low, high, message):
    """Cross-field check low <= high, reported on whichever key the file actually set (the upper one if both)."""

    low_field, high_field = form[low], form[high]
    if low_field.errors or high_field.errors or low_field.data is None or high_field.data is None:
        return True
    if low_field.data <= high_field.data:
        return True
    target = high_field if high_field.raw_data else low_field
    target.errors.append(message)
    return False


class SpecSectionForm(Form):
    """Base form for one section of the spec file. converters turns a validated string field into its model value."""

    model = None
    converters = {}

    def model_values(self):
        """Keyword arguments for the model, holding only the keys present in the file."""

        values = {}
        for field in self:
            if not field.raw_data or not str(field.raw_data[0]).strip():
                continue
            converter = self.converters.get(field.name)
            values[field.name] = converter(field.data) if converter else field.data
        return values


class MarketForm(SpecSectionForm):
    """Settings of the synthetic market: basket size, horizon, the elasticity range the true elasticities are drawn from,
    the price box and day-zero price, the forecaster and the noise."""

    model = MarketConfig

    basket_size = IntegerField("basket_size", default=100, validators=_number(NumberRange(min=1, message="must be at least 1")))
    horizon = IntegerField("horizon", default=100, validators=_number(NumberRange(min=1, message="must be at least 1")))
    gamma_low = FloatField("gamma_low", default=-3.0, validators=_number(_negative))
    gamma_high = FloatField("gamma_high", default=-1.0, validators=_number(_negative))
    initial_price = FloatField("initial_price", default=12.0, validators=_number(_positive))
    forecast_low = FloatField("forecast_low", default=0.5, validators=_number(NumberRange(min=0, message="must be >= 0")))
    forecast_high = FloatField("forecast_high", default=5.0, validators=_number(NumberRange(min=0, message="must be >= 0")))
    price_low = FloatField("price_low", default=10.0, validators=_number(_positive))
    price_high = FloatField("price_high", default=20.0, validators=_number(_positive))
    decay = FloatField("decay", default=0.5, validators=_number(_open_unit))
    base = FloatField("base", default=0.5, validators=_number(_positive))
    noise_std = FloatField("noise_std", default=1.0, validators=_number(NumberRange(min=0, message="must be >= 0")))
    fixed_fraction = FloatField(
        "fixed_fraction", default=0.0, validators=_number(NumberRange(min=0, max=1, message="must lie in [0, 1]"))
    )
    max_rel_change = FloatField("max_rel_change", default=None, validators=_number(NumberRange(min=0, message="must be >= 0")))

    def validate(self, extra_validators=None):
        valid = super().validate(extra_validators)
        valid &= _require_order(self, "gamma_low", "gamma_high", "gamma_high must not be below gamma_low")
        valid &= _require_order(self, "price_low", "price_high", "price_high must not be below price_low")
        valid &= _require_order(self, "forecast_low", "forecast_high", "forecast_high must not be below forecast_low")
        valid &= _require_order(self, "price_low", "initial_price", "initial_price must lie inside the price box")
        valid &= _require_order(self, "initial_price", "price_high", "initial_price must lie inside the price box")
        return valid


class ThompsonForm(SpecSectionForm):
    model = TSConfig
    converters = {"prior_mean": parse_prior_mean, "noise_var": parse_noise_var}

    prior_mean = StringField("prior_mean", default="-1.5", validators=[Optional(), _parses_with(parse_prior_mean)])
    prior_scale = FloatField("prior_scale", default=0.25, validators=_number(_positive))
    noise_var = StringField("noise_var", default=AUTO_NOISE, validators=[Optional(), _parses_with(parse_noise_var)])
    ridge = FloatField("ridge", default=0.0, validators=_number(NumberRange(min=0, message="must be >= 0")))
    max_rejections = IntegerField(
        "max_rejections", default=1000, validators=_number(NumberRange(min=1, message="must be at least 1"))
    )
    update_period = IntegerField("update_period", default=1, validators=_number(NumberRange(min=1, message="must be at least 1")))
    mode = StringField(
        "mode", default=AUTO, validators=[Optional(), AnyOf([AUTO, FULL, DIAGONAL], message="must be auto, full or diagonal")]
    )
    forecast_threshold = FloatField(
        "forecast_threshold", default=0.0, validators=_number(NumberRange(min=0, message="must be >= 0"))
    )
    warmup_days = IntegerField("warmup_days", default=0, validators=_number(NumberRange(min=0, message="must be >= 0")))


class PassiveForm(SpecSectionForm):
    model = PassiveConfig

    estimator = StringField(
        "estimator", default="ols", validators=[Optional(), AnyOf(ESTIMATORS, message=f"must be one of {', '.join(ESTIMATORS)}")]
    )
    window = IntegerField("window", default=60, validators=_number(NumberRange(min=2, message="must be at least 2 days")))
    initial_elasticity = FloatField("initial_elasticity", default=-1.5, validators=_number(_negative))
    huber_delta = FloatField("huber_delta", default=None, validators=_number(_positive))


class ExperimentForm(SpecSectionForm):
    """How many trials, which policies, where the artifacts go and how the report is cut."""

    model = ExperimentSpec
    converters = {"policies": parse_policies, "report_ks": parse_ks}

    trials = IntegerField("trials", default=10, validators=_number(NumberRange(min=1, message="trials must be ≥ 1")))
    policies = StringField("policies", default=", ".join(POLICIES), validators=[Optional(), _parses_with(parse_policies)])
    output_dir = StringField("output_dir", default="results", validators=[Optional()])
    report_ks = StringField("report_ks", default="5, 10, 15, 20, 25, 30", validators=[Optional(), _parses_with(parse_ks)])
    seed = IntegerField("seed", default=0, validators=_number(NumberRange(min=0, max=2 ** 64 - 1, message="must be a u64")))
    workers = IntegerField("workers", default=1, validators=_number(NumberRange(min=1, message="must be at least 1")))
    window_start = IntegerField("window_start", default=None, validators=_number(NumberRange(min=1, message="must be at least 1")))
    baseline_days = IntegerField("baseline_days", default=30, validators=_number(NumberRange(min=1, message="must be at least 1")))


SECTION_FORMS = {"market": MarketForm, "ts": ThompsonForm, "passive": PassiveForm, "experiment": ExperimentForm}

_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_LINE = re.compile(r"^([^\s#;\[=:][^=:]*?)\s*[=:]")


def _key_lines(text):
    """(section, key) -> 1-based line number, the way configparser would read the file."""

    lines = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip()
            lines[(section, "")] = number
            continue
        key = _KEY_LINE.match(line)
        if key and section is not None:
            lines.setdefault((section, key.group(1).strip().lower()), number)
    return lines


def parse_spec(text):
    """Parses and validates spec text. Raises SpecError listing every problem found."""

    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SpecError([FieldProblem("", "", exc.message.splitlines()[0], getattr(exc, "lineno", None))]) from exc

    lines = _key_lines(text)
    problems = []
    values = {}
    for section in parser.sections():
        if section not in SECTION_FORMS:
            problems.append(FieldProblem(section, "", "unknown section", lines.get((section, ""))))
            continue
        form = SECTION_FORMS[section](formdata=MultiDict(parser.items(section)))
        for key in parser[section]:
            if key not in form:
                problems.append(FieldProblem(section, key, "unknown key", lines.get((section, key))))
        if form.validate():
            values[section] = form.model_values()
            continue
        for field in form:
            problems.extend(FieldProblem(section, field.name, message, lines.get((section, field.name))) for message in field.errors)
    if problems:
        raise SpecError(problems)

    section = "market"
    try:
        market = MarketConfig(**values.get("market", {}))
        section = "ts"
        ts = TSConfig(**values.get("ts", {}))
        section = "passive"
        passive = PassiveConfig(**values.get("passive", {}))
        section = "experiment"
        return ExperimentSpec(market=market, ts=ts, passive=passive, **values.get("experiment", {}))
    except InvalidInputError as exc:
        raise SpecError([FieldProblem(section, "", str(exc))]) from exc


def load_spec(path):
    with open(path, encoding="utf-8") as handle:
        return parse_spec(handle.read())


def _render_value(name, value):
    if value is None:
        return AUTO_NOISE if name == "noise_var" else None
    if isinstance(value, tuple):
        text = ", ".join(_render_value(name, item) for item in value)
        return text + "," if len(value) == 1 else text
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_spec(spec):
    """Canonical spec text for spec: every key written out, floats in repr form so that parse_spec gives back an equal spec.
    Keys whose value is None (no limit, no override) are left out."""

    sources = {"market": spec.market, "ts": spec.ts, "passive": spec.passive, "experiment": spec}
    out = []
    for section, form_class in SECTION_FORMS.items():
        out.append(f"[{section}]")
        for field in form_class():
            text = _render_value(field.name, getattr(sources[section], field.name))
            if text is not None:
                out.append(f"{field.name} = {text}")
        out.append("")
    return "\n".join(out)
