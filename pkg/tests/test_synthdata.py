import numpy as np
import pytest

from glucast.synthdata import PatientProfile, default_cohort, generate_patient


def test_same_seed_bit_identical():
    profile = PatientProfile(seed=7)
    a = generate_patient(profile, days=3)
    b = generate_patient(profile, days=3)
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.glucose, b.glucose)
    assert np.array_equal(a.cho, b.cho)
    assert np.array_equal(a.insulin, b.insulin)


def test_quiet_patient_stays_at_basal():
    profile = PatientProfile(basal=110.0, noise_std=0.0, meal_schedule=(),
                             bolus_schedule=(), seed=0)
    s = generate_patient(profile, days=1)
    assert np.array_equal(s.glucose, np.full(288, 110.0))


def test_single_meal_raises_glucose_within_90_minutes():
    profile = PatientProfile(basal=110.0, noise_std=0.0,
                             meal_schedule=((8 * 60, 50.0),),
                             bolus_schedule=(), seed=1)
    s = generate_patient(profile, days=1)
    meal_slot = int(np.argmax(s.cho > 0))
    window = s.glucose[meal_slot:meal_slot + 18]  # 90 minutes
    assert window.max() > 110.0


def test_glucose_stays_in_admissible_range():
    for seed in range(5):
        profile = PatientProfile(seed=seed, noise_std=4.0)
        s = generate_patient(profile, days=7)
        present = np.isfinite(s.glucose)
        assert np.all(s.glucose[present] >= 20.0)
        assert np.all(s.glucose[present] <= 500.0)


def test_missing_rate_produces_gaps():
    profile = PatientProfile(seed=3, missing_rate=0.1)
    s = generate_patient(profile, days=2)
    frac = np.mean(~np.isfinite(s.glucose))
    assert 0.05 < frac < 0.3


def test_cohort_patients_have_distinct_means():
    profiles = default_cohort(4, seed=11)
    means = [np.nanmean(generate_patient(p, days=2).glucose) for p in profiles]
    assert len(set(np.round(means, 3))) == 4
    assert all(p.patient_id == f"p{i:02d}" for i, p in enumerate(profiles))


def test_profile_validation():
    with pytest.raises(ValueError):
        PatientProfile(basal=60.0)
    with pytest.raises(ValueError):
        PatientProfile(cho_sensitivity=0.0)
    with pytest.raises(ValueError):
        generate_patient(PatientProfile(), days=0)
