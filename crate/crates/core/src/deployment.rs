//! Authority-side setup: manufactories, the shared registry, the supervisor
//! token and a common clock, with helpers to provision modules and vehicles.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;

use crate::crs::{parse_id, setup, CrsError, CrsParams, MasterKeyPair, Registry, MASTER_KEY_LEN};
use crate::group::Group;
use crate::hsm::{Clock, HardwareModule, HsmError, ManualClock, SupervisorToken};
use crate::vehicle::{Vehicle, VehicleConfig, VehicleError};

pub struct Deployment<G: Group> {
    registry: Arc<Registry<G>>,
    manufactories: BTreeMap<String, MasterKeyPair<G>>,
    clock: Arc<ManualClock>,
    supervisor: SupervisorToken,
    min_span_time: u64,
}

impl<G: Group> Deployment<G> {
    /// Runs setup for each manufactory with full-length master keys.
    pub fn new<R: RngCore + ?Sized>(
        group: G,
        manufactories: &[&str],
        min_span_time: u64,
        start_time: u64,
        rng: &mut R,
    ) -> Result<Self, CrsError> {
        Self::with_params(CrsParams::new(group), manufactories, min_span_time, start_time, rng)
    }

    pub fn with_params<R: RngCore + ?Sized>(
        params: CrsParams<G>,
        manufactories: &[&str],
        min_span_time: u64,
        start_time: u64,
        rng: &mut R,
    ) -> Result<Self, CrsError> {
        let mut registry = Registry::new(params.clone());
        let mut keys = BTreeMap::new();
        for name in manufactories {
            let mk = setup(&params, MASTER_KEY_LEN, name, rng)?;
            registry.register(mk.public_key())?;
            keys.insert(name.to_string(), mk);
        }
        Ok(Deployment {
            registry: Arc::new(registry),
            manufactories: keys,
            clock: Arc::new(ManualClock::new(start_time)),
            supervisor: SupervisorToken::generate(rng),
            min_span_time,
        })
    }

    pub fn registry(&self) -> &Arc<Registry<G>> {
        &self.registry
    }

    pub fn group(&self) -> &G {
        self.registry.group()
    }

    pub fn clock(&self) -> &Arc<ManualClock> {
        &self.clock
    }

    pub fn supervisor(&self) -> &SupervisorToken {
        &self.supervisor
    }

    pub fn min_span_time(&self) -> u64 {
        self.min_span_time
    }

    pub fn master_key(&self, manufactory: &str) -> Option<&MasterKeyPair<G>> {
        self.manufactories.get(manufactory)
    }

    /// A blank module sharing this deployment's registry, clock and
    /// supervisor.
    pub fn blank_module(&self) -> HardwareModule<G> {
        let clock: Arc<dyn Clock> = self.clock.clone();
        HardwareModule::new(
            self.registry.clone(),
            clock,
            self.supervisor.authority(),
            self.min_span_time,
        )
    }

    /// A module joined as `id`, whose manufactory prefix selects the
    /// master key.
    pub fn module<R: RngCore + ?Sized>(
        &self,
        id: &str,
        rng: &mut R,
    ) -> Result<HardwareModule<G>, HsmError> {
        let (mfr, _) = parse_id(id)?;
        let mk = self
            .master_key(mfr)
            .ok_or_else(|| HsmError::UnregisteredManufactory(mfr.to_string()))?;
        let mut module = self.blank_module();
        module.join(mk, id, rng)?;
        Ok(module)
    }

    /// Like [`Deployment::module`] with the module's master secret chosen by
    /// the caller.
    pub fn module_with_secret(
        &self,
        id: &str,
        f: G::Scalar,
    ) -> Result<HardwareModule<G>, HsmError> {
        let (mfr, _) = parse_id(id)?;
        let mk = self
            .master_key(mfr)
            .ok_or_else(|| HsmError::UnregisteredManufactory(mfr.to_string()))?;
        let mut module = self.blank_module();
        module.join_with_master_secret(mk, id, f)?;
        Ok(module)
    }

    pub fn vehicle<R: RngCore + ?Sized>(
        &self,
        id: &str,
        config: VehicleConfig,
        rng: &mut R,
    ) -> Result<Vehicle<G>, VehicleError> {
        Vehicle::new(self.module(id, rng)?, config)
    }
}
