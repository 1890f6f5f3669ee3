"""FastAPI service wrapping the analysis package.

Every endpoint is a stateless adapter: parse the request documents with the
core validators, call the matching operation, serialize the result.  Domain
validation failures surface as HTTP 422 with the core error message."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import boost as boost_mod
from .. import bounds, empirical, faults, net as net_mod, targets, trainer
from . import schemas as S


def _net(model: S.NetworkModel) -> net_mod.Network:
    try:
        return net_mod.from_document(model.model_dump())
    except (net_mod.SchemaError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _dist(model: S.DistributionModel) -> faults.FaultDistribution:
    try:
        return faults.FaultDistribution(model.kind, tuple(model.per_layer))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _target(model: S.TargetModel) -> targets.TargetFunction:
    try:
        return targets.make_target(model.name, **model.params)
    except (TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _scenario(model: S.ScenarioModel) -> faults.FaultScenario:
    try:
        return faults.scenario_from_document(model.model_dump())
    except (faults.ScenarioError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _domain(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (faults.ScenarioError, faults.PolicyError, net_mod.SchemaError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(
        title="neurofail",
        description=(
            "Fault-tolerance analysis for feed-forward neural networks: "
            "worst-case error-propagation bounds, certificates, fault injection, "
            "quantization budgets, and early-cutoff scheduling."
        ),
        version="0.1.0",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/forward", response_model=S.ForwardResponse)
    def forward(req: S.ForwardRequest) -> S.ForwardResponse:
        network = _net(req.network)
        return S.ForwardResponse(output=_domain(net_mod.forward, network, req.input))

    @app.post("/analyze", response_model=S.ReportResponse)
    def analyze(req: S.AnalyzeRequest) -> S.ReportResponse:
        network = _net(req.network)
        dist = _dist(req.distribution)
        fn = bounds.fep_neurons if dist.kind == faults.NEURON else bounds.fep_synapses
        report = _domain(fn, network, dist, req.capacity, eps=req.eps, eps_prime=req.eps_prime)
        hint = 0 if report.certified is not False else 1
        return S.ReportResponse(report=report.to_document(), exit_hint=hint)

    @app.post("/certify", response_model=S.ReportResponse)
    def certify(req: S.CertifyRequest) -> S.ReportResponse:
        network = _net(req.network)
        dist = _dist(req.distribution)
        fn = bounds.certify_neurons if dist.kind == faults.NEURON else bounds.certify_synapses
        report = _domain(fn, network, dist, req.eps, req.eps_prime, req.capacity)
        return S.ReportResponse(report=report.to_document(), exit_hint=0 if report.certified else 1)

    @app.post("/inject", response_model=S.InjectResponse)
    def inject(req: S.InjectRequest) -> S.InjectResponse:
        network = _net(req.network)
        scenario = _scenario(req.scenario)
        nominal = _domain(net_mod.forward, network, req.input)
        faulty = _domain(faults.forward_faulty, network, req.input, scenario)
        observed = abs(nominal - faulty)
        bound = utilization = sound = None
        if req.distribution is not None and scenario.capacity is not None:
            dist = _dist(req.distribution)
            fn = bounds.fep_neurons if dist.kind == faults.NEURON else bounds.fep_synapses
            bound = _domain(fn, network, dist, scenario.capacity).fep
            utilization = 0.0 if bound == 0 and observed == 0 else (observed / bound if bound else None)
            sound = observed <= bound + empirical.SOUNDNESS_TOL
        return S.InjectResponse(
            nominal=nominal,
            faulty=faulty,
            observed_error=observed,
            bound=bound,
            utilization=utilization,
            sound=sound,
        )

    @app.post("/train", response_model=S.TrainResponse)
    def train_endpoint(req: S.TrainRequest) -> S.TrainResponse:
        target = _target(req.target)
        cfg_kwargs = req.config.model_dump()
        act = cfg_kwargs.pop("activation")
        cfg_kwargs["activation"] = net_mod.ActivationSpec(act["kind"], act["k"])
        cfg_kwargs["layer_sizes"] = tuple(cfg_kwargs["layer_sizes"])
        try:
            cfg = trainer.TrainConfig(**cfg_kwargs)
            result = trainer.train(target, cfg)
        except (trainer.TrainingError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return S.TrainResponse(
            network=S.NetworkModel(**net_mod.to_document(result.network)),
            eps_prime=result.eps_prime,
            history_csv=result.history_csv(),
        )

    @app.post("/sweep-k", response_model=S.SweepKResponse)
    def sweep_k(req: S.SweepKRequest) -> S.SweepKResponse:
        network = _net(req.network)
        dist = _dist(req.distribution)
        result = _domain(
            empirical.k_sweep, network, dist, req.k_values, req.trials, req.seed, req.capacity
        )
        return S.SweepKResponse(
            rows=[list(row) for row in result.rows],
            csv=result.to_csv(),
            fep_slope=result.fep_slope(),
            observed_slope=result.observed_slope(),
        )

    @app.post("/quantize", response_model=S.QuantizeResponse)
    def quantize_endpoint(req: S.QuantizeRequest) -> S.QuantizeResponse:
        network = _net(req.network)
        rows = []
        X = empirical.grid_points(network.input_dim, req.grid_per_dim)
        exact = net_mod.forward_batch(network, X)
        for bits in req.fractional_bits:
            qnet, lambdas = _domain(trainer.quantize, network, bits)
            bound = bounds.quantization_bound(network, lambdas)
            max_err = float(abs(qnet.forward_batch(X) - exact).max())
            rows.append(
                S.QuantizeRow(
                    bits=bits,
                    lam=lambdas[0],
                    bound=bound,
                    max_error=max_err,
                    sound=max_err <= bound + empirical.SOUNDNESS_TOL,
                )
            )
        lines = ["bits,lambda,bound,max_error,sound"]
        lines += [f"{r.bits},{r.lam!r},{r.bound!r},{r.max_error!r},{int(r.sound)}" for r in rows]
        return S.QuantizeResponse(
            rows=rows, csv="\n".join(lines) + "\n", all_sound=all(r.sound for r in rows)
        )

    @app.post("/boost", response_model=S.BoostResponse)
    def boost_endpoint(req: S.BoostRequest) -> S.BoostResponse:
        network = _net(req.network)
        target = _target(req.target)
        latency = _domain(boost_mod.LatencyModel, **req.latency.model_dump())
        policy = _domain(boost_mod.make_boost_policy, network, req.eps, req.eps_prime, req.cut_counts)
        try:
            campaign = boost_mod.boost_campaign(
                network, target, req.eps, req.eps_prime, latency, policy, req.trials, req.seed
            )
        except boost_mod.EpsViolation as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return S.BoostResponse(
            csv=campaign.to_csv(),
            mean_speedup=campaign.mean_speedup,
            max_abs_err=campaign.max_abs_err,
            violations=0,
            certificate=policy.certificate.to_document(),
        )

    @app.post("/brute-check", response_model=S.BruteCheckResponse)
    def brute_check(req: S.BruteCheckRequest) -> S.BruteCheckResponse:
        network = _net(req.network)
        dist = _dist(req.distribution)
        target = _target(req.target)
        certify_fn = bounds.certify_neurons if dist.kind == faults.NEURON else bounds.certify_synapses
        report = _domain(certify_fn, network, dist, req.eps, req.eps_prime, req.capacity)
        capacity = bounds.CRASH_CAPACITY if req.mode == "crash" else req.capacity
        result = _domain(
            empirical.brute_force_certify,
            network,
            dist,
            req.eps,
            req.eps_prime,
            target,
            capacity,
            req.grid_per_dim,
            mode=req.mode,
        )
        certified = bool(report.certified)
        return S.BruteCheckResponse(
            certified=certified,
            brute_force_passed=result.passed,
            agreement=(not certified) or result.passed,
            worst_error=result.worst_error,
            n_scenarios=result.n_scenarios,
        )

    @app.post("/lemma1-demo", response_model=S.UnboundedDemoResponse)
    def lemma1(req: S.UnboundedDemoRequest) -> S.UnboundedDemoResponse:
        network = _net(req.network)
        demo = _domain(empirical.lemma1_demo, network, req.eps, req.input)
        clamped_error = clamped_bound = clamped_sound = None
        if req.clamp_capacity is not None:
            clamped = empirical.clamped_scenario(demo.scenario, req.clamp_capacity)
            faulty = _domain(faults.forward_faulty, network, list(demo.input), clamped)
            clamped_error = abs(demo.nominal_output - faulty)
            fl = [0] * network.depth
            fl[-1] = 1
            clamped_bound = bounds.fep_neurons(
                network, faults.FaultDistribution(faults.NEURON, tuple(fl)), req.clamp_capacity
            ).fep
            clamped_sound = clamped_error <= clamped_bound + empirical.SOUNDNESS_TOL
        return S.UnboundedDemoResponse(
            scenario=faults.scenario_to_document(demo.scenario),
            input=list(demo.input),
            observed_error=demo.observed_error,
            broke=demo.observed_error > req.eps,
            clamped_error=clamped_error,
            clamped_bound=clamped_bound,
            clamped_sound=clamped_sound,
        )

    @app.post("/tightness", response_model=S.TightnessResponse)
    def tightness(req: S.TightnessRequest) -> S.TightnessResponse:
        result = _domain(
            empirical.tightness_experiment,
            n_neurons=req.n_neurons,
            n_fail=req.n_fail,
            w_m=req.w_m,
            alpha=req.alpha,
            k=req.k,
        )
        return S.TightnessResponse(
            utilization=result.utilization,
            observed_error=result.observed_error,
            bound=result.bound,
            network=S.NetworkModel(**net_mod.to_document(result.network)),
        )

    @app.post("/eps-prime", response_model=S.EpsPrimeResponse)
    def eps_prime(req: S.EpsPrimeRequest) -> S.EpsPrimeResponse:
        network = _net(req.network)
        target = _target(req.target)
        est = _domain(empirical.measure_eps_prime, network, target, req.grid_per_dim)
        return S.EpsPrimeResponse(
            eps_prime=est.value, argmax=list(est.argmax), grid_per_dim=est.grid_per_dim
        )

    @app.post("/max-tolerable", response_model=S.MaxTolerableResponse)
    def max_tolerable(req: S.MaxTolerableRequest) -> S.MaxTolerableResponse:
        network = _net(req.network)
        result = _domain(bounds.max_tolerable, network, req.eps, req.eps_prime, req.capacity)
        return S.MaxTolerableResponse(
            distributions=[list(d.per_layer) for d in result.distributions],
            complete=result.complete,
        )

    @app.post("/soundness-sweep", response_model=S.SoundnessSweepResponse)
    def soundness(req: S.SoundnessSweepRequest) -> S.SoundnessSweepResponse:
        network = _net(req.network)
        dist = _dist(req.distribution)
        try:
            result = _domain(
                empirical.soundness_sweep, network, dist, req.capacity, req.trials, req.seed
            )
        except empirical.SoundnessError as exc:
            return S.SoundnessSweepResponse(
                csv="",
                max_error=exc.record.observed_error,
                mean_error=exc.record.observed_error,
                bound=exc.record.bound,
                max_utilization=exc.record.utilization,
                violations=1,
                counterexample=exc.counterexample,
            )
        return S.SoundnessSweepResponse(
            csv=result.to_csv(),
            max_error=result.max_error,
            mean_error=result.mean_error,
            bound=result.bound,
            max_utilization=result.max_utilization,
            violations=0,
            counterexample=None,
        )

    return app


app = create_app()
