"""
Tests for the read-only runs API
"""

from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from simulations.models import EnergyRecord, SimulationRun


def make_record(run, step, E_total):
    return EnergyRecord.objects.create(
        run=run, step=step, t=0.01 * step, E_k_fluid=E_total, E_k_solid_delta=0.0,
        E_d=0.0, E_p=0.0, E_total=E_total, E_ratio=E_total / 2.0,
        mass_variation=0.0, mass_solid=0.188,
    )


class SimulationRunAPITest(APITestCase):
    """Test run listing, detail and energy endpoints"""

    def setUp(self):
        self.run = SimulationRun.objects.create(
            scenario='activated_disc', cells='16x16', dt=0.01, n_steps=2,
            status='completed', config={'dt': 0.01},
        )
        self.failed = SimulationRun.objects.create(
            scenario='stretched_disc', cells='22x22', dt=0.005, n_steps=100,
            status='failed', failed_step=4,
        )
        for step, value in [(2, 1.8), (0, 2.0), (1, 1.9)]:
            make_record(self.run, step, value)

    def test_list_runs(self):
        """Test both runs are listed with their record counts"""
        response = self.client.get(reverse('api:run-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 2)
        by_id = {row['id']: row for row in response.data['results']}
        self.assertEqual(by_id[self.run.id]['n_records'], 3)
        self.assertAlmostEqual(by_id[self.run.id]['final_E_ratio'], 0.9)
        self.assertIsNone(by_id[self.failed.id]['final_E_ratio'])

    def test_filter_by_status(self):
        """Test the status query filter"""
        response = self.client.get(reverse('api:run-list'), {'status': 'failed'})
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['results'][0]['failed_step'], 4)

    def test_detail_includes_config(self):
        """Test the detail view carries the stored configuration"""
        response = self.client.get(reverse('api:run-detail', args=[self.run.id]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['config'], {'dt': 0.01})

    def test_energy_series_is_ordered(self):
        """Test the energy endpoint returns records by step"""
        response = self.client.get(reverse('api:run-energy', args=[self.run.id]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        steps = [row['step'] for row in response.data['results']]
        self.assertEqual(steps, [0, 1, 2])
        self.assertEqual(response.data['results'][0]['E_total'], 2.0)

    def test_read_only(self):
        """Test runs cannot be created or deleted through the API"""
        response = self.client.post(reverse('api:run-list'), {'scenario': 'custom'})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        response = self.client.delete(reverse('api:run-detail', args=[self.run.id]))
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)

    def test_missing_run(self):
        """Test an unknown run id is a 404"""
        response = self.client.get(reverse('api:run-energy', args=[9999]))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
