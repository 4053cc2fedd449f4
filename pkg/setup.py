# -*- coding: utf-8 -*-
from setuptools import setup

packages = \
['trollector',
 'trollector.cli',
 'trollector.constants',
 'trollector.constants.schema',
 'trollector.mission',
 'trollector.perception',
 'trollector.planner',
 'trollector.sim']

package_data = \
{'': ['*'],
 'trollector': ['defaults/*',
                'scenarios/*',
                'resource/*']}

install_requires = \
['click>=7.1.2',
 'jsonschema>=3.2.0',
 'numpy>=1.19.0',
 'opencv-python>=4.4.0',
 'osqp>=0.6.2',
 'pyyaml>=5.3.1',
 'scipy>=1.5.0',
 'tqdm>=4.49.0']

entry_points = \
{'console_scripts': ['trollector = trollector.cli.cli:entry']}

setup_kwargs = {
    'name': 'trollector',
    'version': '0.1.0',
    'description': 'Simulated autonomy stack of a trolley collecting robot: perception, CBF-constrained NMPC and mission logic.',
    'long_description': open('README.md').read(),
    'long_description_content_type': 'text/markdown',
    'author': 'Trollector developers',
    'author_email': None,
    'maintainer': None,
    'maintainer_email': None,
    'url': None,
    'packages': packages,
    'package_data': package_data,
    'install_requires': install_requires,
    'entry_points': entry_points,
    'python_requires': '>=3.7,<3.11',
}


setup(**setup_kwargs)

# This setup.py was autogenerated using poetry.
